#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "osubeats/beat_eval.hpp"
#include "osubeats/beat_grid.hpp"
#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"

namespace osubeats {

enum class RelationKind { Same, Double, Half, Offbeat, Other };

constexpr std::string_view relation_label(RelationKind kind) {
  switch (kind) {
    case RelationKind::Same: return "Same";
    case RelationKind::Double: return "Double";
    case RelationKind::Half: return "Half";
    case RelationKind::Offbeat: return "Offbeat";
    case RelationKind::Other: return "Other";
  }
  return "Other";
}

struct MetricalRelation {
  RelationKind variant = RelationKind::Other;
  /// Median reference inter-beat interval over median estimate interval.
  double tempo_ratio = 0.0;
};

struct RatioBands {
  double tolerance = 0.04;

  bool near(double ratio, double center) const {
    return ratio >= center * (1.0 - tolerance) && ratio <= center * (1.0 + tolerance);
  }
};

struct AgreementReport {
  std::string audio_md5;
  std::vector<std::string> annotation_ids;
  /// pairwise[i][j]: annotation i as reference, j as estimate.
  std::vector<std::vector<EvalScores>> pairwise;
  std::vector<std::vector<MetricalRelation>> relations;
  /// Distinct meter sequences in first-seen order.
  std::vector<std::vector<int>> meter_sets;
  /// Per annotation: its measure-length sequence.
  std::vector<std::vector<int>> meters;
  bool meter_disagreement = false;
  /// Per annotation: it uses a compound or additive meter while the group
  /// disagrees on meter, which marks it as the likelier reading.
  std::vector<bool> suggested_interpretation;
};

/// Entries sharing an audio digest, only for digests seen at least twice.
/// Groups are ordered by digest.
template <typename Entry>
std::map<std::string, std::vector<Entry>> group_by_audio(const std::vector<Entry>& entries) {
  std::map<std::string, std::vector<Entry>> groups;
  for (const auto& e : entries) groups[e.audio_md5].push_back(e);
  std::erase_if(groups, [](const auto& kv) { return kv.second.size() < 2; });
  return groups;
}

inline double median_interval(const std::vector<double>& times) {
  std::vector<double> ibi;
  ibi.reserve(times.size());
  for (std::size_t i = 1; i < times.size(); ++i) ibi.push_back(times[i] - times[i - 1]);
  std::sort(ibi.begin(), ibi.end());
  const std::size_t n = ibi.size();
  return n % 2 == 1 ? ibi[n / 2] : 0.5 * (ibi[n / 2 - 1] + ibi[n / 2]);
}

inline MetricalRelation classify_relation(const BeatAnnotation& ref, const BeatAnnotation& est,
                                          const EvalConfig& config = {}, const RatioBands& bands = {}) {
  if (ref.size() < 2 || est.size() < 2) throw Error(Errc::DegenerateAnnotation, "need at least 2 beats per annotation");
  const auto ref_times = ref.times();
  const auto est_times = est.times();

  MetricalRelation rel;
  rel.tempo_ratio = median_interval(ref_times) / median_interval(est_times);
  if (bands.near(rel.tempo_ratio, 1.0)) {
    if (f_measure(ref_times, est_times, config.f_window_s) >= 0.5) {
      rel.variant = RelationKind::Same;
    } else if (continuity_scores(ref_times, est_times, config.phase_tol, config.period_tol).amlt >= 0.9) {
      rel.variant = RelationKind::Offbeat;
    }
  } else if (bands.near(rel.tempo_ratio, 2.0)) {
    rel.variant = RelationKind::Double;
  } else if (bands.near(rel.tempo_ratio, 0.5)) {
    rel.variant = RelationKind::Half;
  }
  return rel;
}

/// Measure lengths read off the index cycle, consecutive repeats collapsed.
/// Only measures closed by a following downbeat count; the open measure at
/// the end is used only when nothing else is available.
inline std::vector<int> meter_sequence(const BeatAnnotation& annotation) {
  std::vector<int> lengths;
  int current = 0;
  for (std::size_t i = 0; i < annotation.events.size(); ++i) {
    const auto& e = annotation.events[i];
    if (e.index == 1 && i > 0) {
      lengths.push_back(current);
      current = 0;
    }
    current = std::max(current, e.index);
  }
  if (lengths.empty() && current > 0) lengths.push_back(current);

  std::vector<int> collapsed;
  for (int m : lengths) {
    if (collapsed.empty() || collapsed.back() != m) collapsed.push_back(m);
  }
  return collapsed;
}

/// Compound (6, 9, 12, ...) or additive (5, 7, 11, ...) meters.
inline bool is_compound_or_additive(int meter) { return meter >= 5 && (meter % 3 == 0 || meter % 2 == 1); }

inline PredictionSet as_prediction(const BeatAnnotation& annotation) {
  PredictionSet p;
  p.beat_times_s = annotation.times();
  std::vector<int> positions;
  positions.reserve(annotation.size());
  for (const auto& e : annotation.events) positions.push_back(e.index);
  p.beat_positions = std::move(positions);
  return p;
}

inline AgreementReport pairwise_agreement(const std::vector<BeatAnnotation>& group, const EvalConfig& config = {},
                                          std::vector<std::string> ids = {}) {
  if (group.size() < 2) throw Error(Errc::GroupTooSmall, "agreement needs at least 2 annotations");
  if (ids.empty()) {
    for (const auto& a : group) ids.push_back(std::to_string(a.beatmapset_id));
  }
  if (ids.size() != group.size()) throw Error(Errc::InvalidArgument, "one id per annotation required");

  AgreementReport report;
  report.audio_md5 = group.front().source_md5;
  report.annotation_ids = std::move(ids);
  const std::size_t n = group.size();
  report.pairwise.assign(n, std::vector<EvalScores>(n));
  report.relations.assign(n, std::vector<MetricalRelation>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      report.pairwise[i][j] = evaluate_pair(group[i], as_prediction(group[j]), config);
      report.relations[i][j] = classify_relation(group[i], group[j], config);
    }
  }

  for (const auto& a : group) {
    report.meters.push_back(meter_sequence(a));
    if (std::find(report.meter_sets.begin(), report.meter_sets.end(), report.meters.back()) == report.meter_sets.end()) {
      report.meter_sets.push_back(report.meters.back());
    }
  }
  report.meter_disagreement = report.meter_sets.size() > 1;
  for (const auto& m : report.meters) {
    report.suggested_interpretation.push_back(report.meter_disagreement &&
                                              std::any_of(m.begin(), m.end(), is_compound_or_additive));
  }
  return report;
}

/// Signed mean of (annotation - prediction) over greedily matched beats;
/// negative when the annotation runs ahead of the prediction.
inline double mean_annotation_lead(const BeatAnnotation& ref, const std::vector<double>& est_times_s,
                                   double window_s = 0.07) {
  const auto ref_times = ref.times();
  detail::require_sorted(ref_times, "annotation");
  detail::require_sorted(est_times_s, "prediction");
  double sum = 0.0;
  std::size_t matched = 0;
  for_each_match(ref_times, est_times_s, window_s, [&](std::size_t r, std::size_t e) {
    sum += ref_times[r] - est_times_s[e];
    ++matched;
  });
  if (matched == 0) throw Error(Errc::NoMatches, "no annotation beat within the window of a prediction");
  return sum / static_cast<double>(matched);
}

/// Rows "md5, id_i, id_j, relation, tempo_ratio, beat_f, beat_amlt,
/// downbeat_f" for every ordered pair i != j.
inline std::string format_agreement_rows(const AgreementReport& report) {
  std::string out;
  const std::size_t n = report.annotation_ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& s = report.pairwise[i][j];
      const auto& r = report.relations[i][j];
      out += report.audio_md5 + "\t" + report.annotation_ids[i] + "\t" + report.annotation_ids[j] + "\t" +
             std::string(relation_label(r.variant)) + "\t" + detail::format_fixed(r.tempo_ratio, 6) + "\t" +
             detail::format_fixed(s.beat_f, 6) + "\t" + detail::format_fixed(s.beat_amlt, 6) + "\t" +
             detail::format_fixed(s.downbeat_f, 6) + "\n";
    }
  }
  return out;
}

}  // namespace osubeats
