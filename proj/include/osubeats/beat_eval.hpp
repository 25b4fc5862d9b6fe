#pragma once

// Beat and downbeat scoring: F-measure with a tolerance window and the
// continuity family (CMLc/CMLt at the annotated metrical level, AMLc/AMLt
// over the allowed alternative levels).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osubeats/beat_grid.hpp"
#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"
#include "osubeats/partition.hpp"

namespace osubeats {

struct EvalConfig {
  double f_window_s = 0.07;
  double phase_tol = 0.175;
  double period_tol = 0.175;
  /// Discard events before `lead_in_s` in both sequences before scoring.
  bool trim_lead_in = false;
  double lead_in_s = 5.0;
  bool score_downbeats = true;

  void validate() const {
    if (!(f_window_s > 0.0)) throw Error(Errc::InvalidArgument, "F-measure window must be positive");
    if (!(phase_tol > 0.0 && phase_tol < 1.0)) throw Error(Errc::InvalidArgument, "phase tolerance must be in (0,1)");
    if (!(period_tol > 0.0 && period_tol < 1.0)) throw Error(Errc::InvalidArgument, "period tolerance must be in (0,1)");
  }
};

struct PredictionSet {
  std::vector<double> beat_times_s;
  /// Position in measure per beat (1 = downbeat), when the tracker reports it.
  std::optional<std::vector<int>> beat_positions;
  /// Explicit downbeat times; takes precedence over positions.
  std::optional<std::vector<double>> downbeat_times_s;
};

struct ContinuityScores {
  double cmlc = 0.0;
  double cmlt = 0.0;
  double amlc = 0.0;
  double amlt = 0.0;

  bool operator==(const ContinuityScores&) const = default;
};

struct EvalScores {
  double beat_f = 0.0, beat_cmlc = 0.0, beat_cmlt = 0.0, beat_amlc = 0.0, beat_amlt = 0.0;
  double downbeat_f = 0.0, downbeat_cmlc = 0.0, downbeat_cmlt = 0.0, downbeat_amlc = 0.0, downbeat_amlt = 0.0;

  static constexpr std::array<std::string_view, 10> kFieldNames = {
      "beat_f",     "beat_cmlc",     "beat_cmlt",     "beat_amlc",     "beat_amlt",
      "downbeat_f", "downbeat_cmlc", "downbeat_cmlt", "downbeat_amlc", "downbeat_amlt"};

  std::array<double, 10> values() const {
    return {beat_f, beat_cmlc, beat_cmlt, beat_amlc, beat_amlt,
            downbeat_f, downbeat_cmlc, downbeat_cmlt, downbeat_amlc, downbeat_amlt};
  }

  static EvalScores from_values(const std::array<double, 10>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
  }

  bool operator==(const EvalScores&) const = default;
};

struct SummaryRow {
  SubsetKind subset = SubsetKind::SingleTiming;
  std::size_t count = 0;
  EvalScores means;
};

namespace detail {

inline void require_sorted(const std::vector<double>& v, const char* what) {
  if (!std::is_sorted(v.begin(), v.end())) throw Error(Errc::UnsortedInput, std::string(what) + " is not sorted");
}

}  // namespace detail

/// One-to-one matching within ±window. Estimates are visited in time order
/// and each claims the earliest unclaimed reference in range, which yields a
/// maximum matching for interval windows on a line. `on_match(ref, est)`
/// receives index pairs in increasing order.
template <typename OnMatch>
void for_each_match(const std::vector<double>& reference_s, const std::vector<double>& estimate_s, double window_s,
                    OnMatch&& on_match) {
  std::size_t r = 0;
  for (std::size_t i = 0; i < estimate_s.size(); ++i) {
    const double e = estimate_s[i];
    while (r < reference_s.size() && reference_s[r] < e && !(std::abs(reference_s[r] - e) <= window_s)) ++r;
    if (r < reference_s.size() && std::abs(reference_s[r] - e) <= window_s) {
      on_match(r, i);
      ++r;
    }
  }
}

inline std::size_t count_matches(const std::vector<double>& reference_s, const std::vector<double>& estimate_s,
                                 double window_s) {
  std::size_t matched = 0;
  for_each_match(reference_s, estimate_s, window_s, [&](std::size_t, std::size_t) { ++matched; });
  return matched;
}

inline double f_measure(const std::vector<double>& reference_s, const std::vector<double>& estimate_s,
                        double window_s = 0.07) {
  if (!(window_s > 0.0)) throw Error(Errc::InvalidArgument, "window must be positive");
  detail::require_sorted(reference_s, "reference");
  detail::require_sorted(estimate_s, "estimate");
  if (reference_s.empty() && estimate_s.empty()) return 1.0;
  if (reference_s.empty() || estimate_s.empty()) return 0.0;

  const std::size_t matched = count_matches(reference_s, estimate_s, window_s);
  if (matched == 0) return 0.0;
  const double precision = static_cast<double>(matched) / static_cast<double>(estimate_s.size());
  const double recall = static_cast<double>(matched) / static_cast<double>(reference_s.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// Alternative metrical readings of a reference: as annotated, double tempo,
/// half tempo on even and on odd beats, and the off-beat.
inline std::array<std::vector<double>, 5> metrical_variations(const std::vector<double>& reference_s) {
  std::array<std::vector<double>, 5> out;
  out[0] = reference_s;
  auto& dbl = out[1];
  auto& half_even = out[2];
  auto& half_odd = out[3];
  auto& offbeat = out[4];
  for (std::size_t i = 0; i < reference_s.size(); ++i) {
    dbl.push_back(reference_s[i]);
    if (i + 1 < reference_s.size()) {
      const double mid = reference_s[i] + 0.5 * (reference_s[i + 1] - reference_s[i]);
      dbl.push_back(mid);
      offbeat.push_back(mid);
    }
    (i % 2 == 0 ? half_even : half_odd).push_back(reference_s[i]);
  }
  return out;
}

namespace detail {

struct LevelScore {
  double c = 0.0;
  double t = 0.0;
};

/// Continuity at a single metrical level. Estimate i is correct when
///  (a) it is within phase_tol * I(k) of its nearest reference beat k,
///  (b) estimate i-1 met (a) against reference k-1 (vacuous for i = 0), and
///  (c) its inter-beat interval is within period_tol * I(k) of I(k),
/// where I(k) is the reference interval ending at k (I(0) uses the first
/// interval) and the estimate interval for i = 0 is the first estimate gap.
inline LevelScore continuity_at_level(const std::vector<double>& ref, const std::vector<double>& est, double phase_tol,
                                      double period_tol) {
  if (ref.size() < 2 || est.size() < 2) return {};
  auto ref_interval = [&](std::size_t k) { return k == 0 ? ref[1] - ref[0] : ref[k] - ref[k - 1]; };

  std::size_t correct = 0, run = 0, best_run = 0;
  bool prev_phase_ok = false;
  std::size_t prev_nearest = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e = est[i];
    // Nearest reference beat; ties go to the earlier one.
    const std::size_t upper = static_cast<std::size_t>(std::lower_bound(ref.begin(), ref.end(), e) - ref.begin());
    std::size_t k = upper;
    if (upper == ref.size()) {
      k = ref.size() - 1;
    } else if (upper > 0 && std::abs(e - ref[upper - 1]) <= std::abs(e - ref[upper])) {
      k = upper - 1;
    }
    const double interval = ref_interval(k);
    const bool phase_ok = std::abs(e - ref[k]) <= phase_tol * interval;
    const double est_interval = i == 0 ? est[1] - est[0] : est[i] - est[i - 1];
    const bool period_ok = std::abs(est_interval - interval) <= period_tol * interval;
    const bool continuous = i == 0 || (prev_phase_ok && k >= 1 && prev_nearest == k - 1);

    if (phase_ok && period_ok && continuous) {
      ++correct;
      best_run = std::max(best_run, ++run);
    } else {
      run = 0;
    }
    prev_phase_ok = phase_ok;
    prev_nearest = k;
  }
  const double n = static_cast<double>(est.size());
  return {static_cast<double>(best_run) / n, static_cast<double>(correct) / n};
}

}  // namespace detail

inline ContinuityScores continuity_scores(const std::vector<double>& reference_s, const std::vector<double>& estimate_s,
                                          double phase_tol = 0.175, double period_tol = 0.175) {
  if (!(phase_tol > 0.0 && phase_tol < 1.0) || !(period_tol > 0.0 && period_tol < 1.0)) {
    throw Error(Errc::InvalidArgument, "tolerances must be in (0,1)");
  }
  detail::require_sorted(reference_s, "reference");
  detail::require_sorted(estimate_s, "estimate");
  if (reference_s.size() < 2) throw Error(Errc::DegenerateReference, "need at least 2 reference beats");
  if (estimate_s.size() < 2) return {};

  ContinuityScores out;
  const auto variations = metrical_variations(reference_s);
  for (std::size_t v = 0; v < variations.size(); ++v) {
    const auto level = detail::continuity_at_level(variations[v], estimate_s, phase_tol, period_tol);
    if (v == 0) {
      out.cmlc = level.c;
      out.cmlt = level.t;
    }
    out.amlc = std::max(out.amlc, level.c);
    out.amlt = std::max(out.amlt, level.t);
  }
  return out;
}

namespace detail {

/// Continuity that tolerates a reference too short to define an interval:
/// such a pair counts as perfect only when the estimate reproduces it.
inline ContinuityScores continuity_or_degenerate(const std::vector<double>& ref, const std::vector<double>& est,
                                                 const EvalConfig& config) {
  if (ref.size() >= 2) return continuity_scores(ref, est, config.phase_tol, config.period_tol);
  const bool same = est.size() == ref.size() && f_measure(ref, est, config.f_window_s) == 1.0;
  const double v = same ? 1.0 : 0.0;
  return {v, v, v, v};
}

inline void drop_before(std::vector<double>& v, double t) {
  v.erase(v.begin(), std::lower_bound(v.begin(), v.end(), t));
}

}  // namespace detail

inline std::vector<double> prediction_downbeats(const PredictionSet& prediction) {
  if (prediction.downbeat_times_s) return *prediction.downbeat_times_s;
  if (prediction.beat_positions) {
    std::vector<double> out;
    for (std::size_t i = 0; i < prediction.beat_times_s.size() && i < prediction.beat_positions->size(); ++i) {
      if ((*prediction.beat_positions)[i] == 1) out.push_back(prediction.beat_times_s[i]);
    }
    return out;
  }
  if (prediction.beat_times_s.empty()) return {};
  throw Error(Errc::MissingDownbeatChannel, "prediction has neither positions nor downbeat times");
}

inline EvalScores evaluate_pair(const BeatAnnotation& annotation, const PredictionSet& prediction,
                                const EvalConfig& config = {}) {
  config.validate();
  if (annotation.empty()) throw Error(Errc::InvalidArgument, "annotation is empty");

  std::vector<double> ref_beats = annotation.times();
  std::vector<double> est_beats = prediction.beat_times_s;
  std::vector<double> ref_down, est_down;
  if (config.score_downbeats) {
    ref_down = downbeats(annotation);
    est_down = prediction_downbeats(prediction);
  }
  if (config.trim_lead_in) {
    for (auto* v : {&ref_beats, &est_beats, &ref_down, &est_down}) detail::drop_before(*v, config.lead_in_s);
  }

  EvalScores s;
  s.beat_f = f_measure(ref_beats, est_beats, config.f_window_s);
  const auto beat_cont = detail::continuity_or_degenerate(ref_beats, est_beats, config);
  s.beat_cmlc = beat_cont.cmlc;
  s.beat_cmlt = beat_cont.cmlt;
  s.beat_amlc = beat_cont.amlc;
  s.beat_amlt = beat_cont.amlt;
  if (config.score_downbeats) {
    s.downbeat_f = f_measure(ref_down, est_down, config.f_window_s);
    const auto down_cont = detail::continuity_or_degenerate(ref_down, est_down, config);
    s.downbeat_cmlc = down_cont.cmlc;
    s.downbeat_cmlt = down_cont.cmlt;
    s.downbeat_amlc = down_cont.amlc;
    s.downbeat_amlt = down_cont.amlt;
  }
  return s;
}

/// Reads tracker output: one beat per line, either "time" or
/// "time<TAB>position". All lines must use the same column count.
inline PredictionSet parse_predictions(std::string_view text) {
  PredictionSet out;
  std::optional<std::size_t> columns;
  std::vector<int> positions;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const std::size_t end = std::min(line.find_first_of(" \t", start), line.size());
      fields.push_back(line.substr(start, end - start));
      pos = end;
    }
    if (fields.empty() || fields.size() > 2) throw MalformedLineError(i + 1, std::string(lines[i]), "expected 1 or 2 columns");
    if (columns && *columns != fields.size()) throw MalformedLineError(i + 1, std::string(lines[i]), "column count changed");
    columns = fields.size();

    auto t = detail::parse_double(fields[0]);
    if (!t || !std::isfinite(*t)) throw MalformedLineError(i + 1, std::string(lines[i]), "bad time");
    if (!out.beat_times_s.empty() && !(*t > out.beat_times_s.back())) {
      throw Error(Errc::NonMonotoneTimes, "time " + std::string(fields[0]) + " at line " + std::to_string(i + 1) +
                                              " does not increase");
    }
    out.beat_times_s.push_back(*t);
    if (fields.size() == 2) {
      auto p = detail::parse_double(fields[1]);
      if (!p || *p < 1.0 || *p != std::floor(*p)) {
        throw MalformedLineError(i + 1, std::string(lines[i]), "position must be an integer >= 1");
      }
      positions.push_back(static_cast<int>(*p));
    }
  }
  if (columns == 2u) out.beat_positions = std::move(positions);
  return out;
}

/// Per-subset arithmetic means, rows in single / multi_wide / multi_narrow
/// order; subsets without entries are omitted.
inline std::vector<SummaryRow> summarize(const std::vector<std::pair<SubsetKind, EvalScores>>& scores) {
  std::vector<SummaryRow> rows;
  for (SubsetKind kind : kAllSubsets) {
    std::array<double, 10> sums{};
    std::size_t count = 0;
    for (const auto& [k, s] : scores) {
      if (k != kind) continue;
      const auto v = s.values();
      for (std::size_t j = 0; j < v.size(); ++j) sums[j] += v[j];
      ++count;
    }
    if (count == 0) continue;
    for (double& x : sums) x /= static_cast<double>(count);
    rows.push_back({kind, count, EvalScores::from_values(sums)});
  }
  return rows;
}

/// Machine-readable summary: header, then one row per subset with the means
/// at full precision.
inline std::string format_summary_tsv(const std::vector<SummaryRow>& rows) {
  std::string out = "subset\tcount";
  for (auto name : EvalScores::kFieldNames) out += "\t" + std::string(name);
  out += "\n";
  for (const auto& row : rows) {
    out += std::string(subset_label(row.subset)) + "\t" + std::to_string(row.count);
    for (double v : row.means.values()) out += "\t" + detail::format_shortest(v);
    out += "\n";
  }
  return out;
}

/// Human-readable summary with means rounded to two decimals.
inline std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::string out = "subset        count  beat_f  b_cmlc  b_cmlt  b_amlc  b_amlt  down_f  d_cmlc  d_cmlt  d_amlc  d_amlt\n";
  for (const auto& row : rows) {
    std::string label(subset_label(row.subset));
    label.resize(12, ' ');
    std::string count = std::to_string(row.count);
    out += label + "  " + std::string(count.size() < 5 ? 5 - count.size() : 0, ' ') + count;
    for (double v : row.means.values()) out += "    " + detail::format_fixed(v, 2);
    out += "\n";
  }
  return out;
}

}  // namespace osubeats
