#include "osubeats/beat_eval.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace osubeats {
namespace {

std::vector<double> grid(double start, double step, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(start + step * i);
  return out;
}

BeatAnnotation annotation_of(const std::vector<double>& times, int meter) {
  BeatAnnotation a;
  for (std::size_t i = 0; i < times.size(); ++i) a.events.push_back({times[i], static_cast<int>(i % meter) + 1, 0});
  return a;
}

TEST(FMeasure, Examples) {
  EXPECT_EQ(f_measure({1, 2, 3}, {1, 2, 3}, 0.07), 1.0);
  EXPECT_EQ(f_measure({1, 2, 3}, {}, 0.07), 0.0);
  EXPECT_DOUBLE_EQ(f_measure({1.0, 2.0, 3.0, 4.0}, {1.05, 2.05, 3.05, 4.50}, 0.07), 0.75);
  EXPECT_EQ(f_measure({}, {}, 0.07), 1.0);
  EXPECT_EQ(f_measure({}, {1.0}, 0.07), 0.0);
}

TEST(FMeasure, OneToOne) {
  // Two estimates near one reference: only one counts.
  EXPECT_DOUBLE_EQ(f_measure({1.0}, {0.98, 1.02}, 0.07), 2.0 * 0.5 * 1.0 / 1.5);
  // Window edge is inclusive.
  EXPECT_EQ(f_measure({1.0}, {1.0625}, 0.0625), 1.0);
}

TEST(FMeasure, Errors) {
  EXPECT_THROW(f_measure({2, 1}, {1}, 0.07), Error);
  EXPECT_THROW(f_measure({1}, {1}, 0.0), Error);
}

TEST(Continuity, Examples) {
  const auto ref = grid(1.0, 0.5, 40);
  EXPECT_EQ(continuity_scores(ref, ref), (ContinuityScores{1, 1, 1, 1}));

  const auto dbl = grid(1.0, 0.25, 79);
  const auto d = continuity_scores(ref, dbl);
  EXPECT_LT(d.cmlt, 0.05);
  EXPECT_EQ(d.amlt, 1.0);

  const auto off = grid(1.25, 0.5, 39);
  const auto o = continuity_scores(ref, off);
  EXPECT_EQ(o.cmlt, 0.0);
  EXPECT_EQ(o.amlt, 1.0);

  const auto half = grid(1.0, 1.0, 20);
  const auto h = continuity_scores(ref, half);
  EXPECT_LT(h.cmlt, 0.05);
  EXPECT_EQ(h.amlt, 1.0);
}

TEST(Continuity, ShortInputs) {
  EXPECT_EQ(continuity_scores({1, 2, 3}, {1}), (ContinuityScores{}));
  EXPECT_EQ(continuity_scores({1, 2, 3}, {}), (ContinuityScores{}));
  try {
    continuity_scores({1}, {1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateReference);
  }
  EXPECT_THROW(continuity_scores({1, 2}, {1, 2}, 0.0, 0.1), Error);
}

TEST(Continuity, LongestRunVersusTotal) {
  // A gap in the middle splits the run in two.
  auto ref = grid(0.0, 0.5, 20);
  auto est = ref;
  est[10] += 0.2;
  const auto s = continuity_scores(ref, est);
  EXPECT_LT(s.cmlc, s.cmlt);
  EXPECT_LT(s.cmlt, 1.0);
}

std::vector<double> random_estimate(std::mt19937& rng, const std::vector<double>& ref) {
  std::uniform_int_distribution<int> kind(0, 5);
  std::normal_distribution<double> jitter(0.0, 0.03);
  std::vector<double> est;
  const double p = ref.size() > 1 ? ref[1] - ref[0] : 0.5;
  switch (kind(rng)) {
    case 0: est = ref; break;
    case 1: est = grid(ref.front(), p / 2, static_cast<int>(2 * ref.size())); break;
    case 2: est = grid(ref.front() + (rng() % 2) * p, p * 2, static_cast<int>(ref.size() / 2)); break;
    case 3: est = grid(ref.front() + p / 2, p, static_cast<int>(ref.size())); break;
    case 4: est = grid(ref.front() + 0.1, p * 1.1, static_cast<int>(ref.size())); break;
    default:
      for (double r : ref) {
        if (rng() % 5 != 0) est.push_back(r + jitter(rng));
        if (rng() % 7 == 0) est.push_back(r + p * 0.4);
      }
  }
  for (double& e : est) e += jitter(rng) * (rng() % 2);
  std::sort(est.begin(), est.end());
  est.erase(std::unique(est.begin(), est.end()), est.end());
  if (est.size() > 60) est.resize(60);
  return est;
}

std::vector<double> random_reference(std::mt19937& rng) {
  std::uniform_int_distribution<int> n(2, 60);
  std::uniform_real_distribution<double> period(0.25, 1.0), start(0.0, 3.0);
  std::normal_distribution<double> jitter(0.0, 0.01);
  std::vector<double> ref;
  double t = start(rng);
  const double p = period(rng);
  for (int i = n(rng); i > 0; --i) {
    ref.push_back(t);
    t += p * (rng() % 9 == 0 ? 1.5 : 1.0) + jitter(rng);
  }
  return ref;
}

TEST(Metrics, MatchNaiveOraclesAndOrdering) {
  std::mt19937 rng(20240611);
  for (int trial = 0; trial < 500; ++trial) {
    const auto ref = random_reference(rng);
    const auto est = random_estimate(rng, ref);
    SCOPED_TRACE(trial);
    ASSERT_EQ(count_matches(ref, est, 0.07), testing::naive_match_count(ref, est, 0.07));
    ASSERT_EQ(f_measure(ref, est, 0.07), testing::naive_f_measure(ref, est, 0.07));
    const auto got = continuity_scores(ref, est, 0.175, 0.175);
    ASSERT_EQ(got, testing::naive_continuity(ref, est, 0.175, 0.175));
    EXPECT_LE(got.cmlc, got.cmlt);
    EXPECT_LE(got.cmlt, got.amlt);
    EXPECT_LE(got.amlc, got.amlt);
    EXPECT_LE(got.cmlc, got.amlc);
    for (double v : {got.cmlc, got.cmlt, got.amlc, got.amlt}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, InvariantUnderCommonTimeShift) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> ticks(-512, 512);
  auto dyadic = [](std::vector<double> v) {
    for (double& x : v) x = std::round(x * 256.0) / 256.0;
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto ref = dyadic(random_reference(rng));
    const auto est = dyadic(random_estimate(rng, ref));
    if (ref.size() < 2) continue;
    const double shift = ticks(rng) / 64.0;
    auto ref2 = ref, est2 = est;
    for (double& x : ref2) x += shift;
    for (double& x : est2) x += shift;
    EXPECT_EQ(f_measure(ref, est), f_measure(ref2, est2));
    EXPECT_EQ(continuity_scores(ref, est), continuity_scores(ref2, est2));
  }
}

PredictionSet with_positions(const BeatAnnotation& a, int rotate = 0) {
  PredictionSet p;
  p.beat_times_s = a.times();
  std::vector<int> pos;
  for (const auto& e : a.events) pos.push_back(e.index);
  if (rotate != 0) std::rotate(pos.begin(), pos.begin() + rotate, pos.end());
  p.beat_positions = pos;
  return p;
}

const EvalScores kAllOnes = EvalScores::from_values({1, 1, 1, 1, 1, 1, 1, 1, 1, 1});

TEST(EvaluatePair, Examples) {
  const auto ann = annotation_of(grid(0.5, 0.5, 24), 4);
  EXPECT_EQ(evaluate_pair(ann, with_positions(ann)), kAllOnes);

  const auto rotated = evaluate_pair(ann, with_positions(ann, 1));
  EXPECT_EQ(rotated.beat_f, 1.0);
  EXPECT_EQ(rotated.beat_cmlt, 1.0);
  EXPECT_EQ(rotated.beat_amlt, 1.0);
  EXPECT_LT(rotated.downbeat_f, 1.0);

  PredictionSet empty;
  EXPECT_EQ(evaluate_pair(ann, empty), EvalScores{});
}

TEST(EvaluatePair, ExplicitDownbeatsWinOverPositions) {
  const auto ann = annotation_of(grid(0.5, 0.5, 24), 4);
  auto p = with_positions(ann, 1);
  p.downbeat_times_s = downbeats(ann);
  EXPECT_EQ(evaluate_pair(ann, p), kAllOnes);
}

TEST(EvaluatePair, MissingDownbeatChannel) {
  const auto ann = annotation_of(grid(0.5, 0.5, 8), 4);
  PredictionSet p;
  p.beat_times_s = ann.times();
  try {
    evaluate_pair(ann, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingDownbeatChannel);
  }
  EvalConfig beats_only;
  beats_only.score_downbeats = false;
  EXPECT_EQ(evaluate_pair(ann, p, beats_only).beat_f, 1.0);
}

TEST(EvaluatePair, SelfScoreIsPerfectEvenWithOneDownbeat) {
  // 3 beats in 4/4: a single downbeat cannot define an interval.
  const auto ann = annotation_of({1.0, 1.5, 2.0}, 4);
  EXPECT_EQ(evaluate_pair(ann, with_positions(ann)), kAllOnes);
}

TEST(EvaluatePair, LeadInTrim) {
  auto times = grid(0.0, 0.5, 40);
  const auto ann = annotation_of(times, 4);
  auto p = with_positions(ann);
  for (std::size_t i = 0; i < 10; ++i) p.beat_times_s[i] += 0.2;  // wrong only before 5 s
  EvalConfig cfg;
  cfg.trim_lead_in = true;
  EXPECT_EQ(evaluate_pair(ann, p, cfg), kAllOnes);
  cfg.trim_lead_in = false;
  EXPECT_LT(evaluate_pair(ann, p, cfg).beat_f, 1.0);
}

TEST(EvaluatePair, RejectsBadConfigAndEmptyAnnotation) {
  const auto ann = annotation_of(grid(0.5, 0.5, 8), 4);
  EvalConfig bad;
  bad.phase_tol = 1.5;
  EXPECT_THROW(evaluate_pair(ann, with_positions(ann), bad), Error);
  EXPECT_THROW(evaluate_pair(BeatAnnotation{}, PredictionSet{}), Error);
}

TEST(ParsePredictions, Examples) {
  const auto a = parse_predictions("0.52\n1.04\n1.55");
  EXPECT_EQ(a.beat_times_s, (std::vector<double>{0.52, 1.04, 1.55}));
  EXPECT_FALSE(a.beat_positions.has_value());

  const auto b = parse_predictions("0.52\t1\n1.04\t2");
  EXPECT_EQ(b.beat_times_s, (std::vector<double>{0.52, 1.04}));
  EXPECT_EQ(b.beat_positions, (std::vector<int>{1, 2}));

  try {
    parse_predictions("1.0\n0.5");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonMonotoneTimes);
  }
}

TEST(ParsePredictions, Tolerances) {
  EXPECT_EQ(parse_predictions("# comment\r\n0.5 1.0\r\n\r\n1.0 2\r\n").beat_positions, (std::vector<int>{1, 2}));
  EXPECT_TRUE(parse_predictions("").beat_times_s.empty());
  EXPECT_THROW(parse_predictions("0.5\t1\n1.0"), MalformedLineError);
  EXPECT_THROW(parse_predictions("x"), MalformedLineError);
  EXPECT_THROW(parse_predictions("0.5\t0"), MalformedLineError);
  EXPECT_THROW(parse_predictions("0.5\t1\t2"), MalformedLineError);
}

TEST(Summarize, Examples) {
  EvalScores a, b;
  a.beat_f = 0.8;
  b.beat_f = 1.0;
  const auto two = summarize({{SubsetKind::MultiWide, a}, {SubsetKind::MultiWide, b}});
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0].count, 2u);
  EXPECT_DOUBLE_EQ(two[0].means.beat_f, 0.9);

  const auto one = summarize({{SubsetKind::SingleTiming, a}});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].means, a);

  const auto all = summarize({{SubsetKind::MultiNarrow, a}, {SubsetKind::SingleTiming, b}, {SubsetKind::MultiWide, a}});
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].subset, SubsetKind::SingleTiming);
  EXPECT_EQ(all[1].subset, SubsetKind::MultiWide);
  EXPECT_EQ(all[2].subset, SubsetKind::MultiNarrow);
  EXPECT_TRUE(summarize({}).empty());
}

TEST(Summarize, Formats) {
  EvalScores a;
  a.beat_f = 0.875;
  const auto rows = summarize({{SubsetKind::SingleTiming, a}});
  EXPECT_EQ(format_summary_tsv(rows),
            "subset\tcount\tbeat_f\tbeat_cmlc\tbeat_cmlt\tbeat_amlc\tbeat_amlt\tdownbeat_f\tdownbeat_cmlc\t"
            "downbeat_cmlt\tdownbeat_amlc\tdownbeat_amlt\nsingle\t1\t0.875\t0\t0\t0\t0\t0\t0\t0\t0\t0\n");
  const auto table = format_summary_table(rows);
  EXPECT_NE(table.find("single"), std::string::npos);
  EXPECT_NE(table.find("0.88"), std::string::npos);
}

}  // namespace
}  // namespace osubeats
