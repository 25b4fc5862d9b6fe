#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osubeats/error.hpp"
#include "osubeats/osu_format.hpp"

namespace osubeats {

enum class SubsetKind { SingleTiming, MultiWide, MultiNarrow };

/// Display and reporting order.
inline constexpr std::array<SubsetKind, 3> kAllSubsets = {SubsetKind::SingleTiming, SubsetKind::MultiWide,
                                                          SubsetKind::MultiNarrow};

struct SubsetClass {
  SubsetKind kind = SubsetKind::SingleTiming;
  /// Smallest gap between consecutive uninherited offsets; absent for a
  /// single timing point.
  std::optional<double> min_gap_s;

  bool operator==(const SubsetClass&) const = default;
};

constexpr std::string_view subset_label(SubsetKind kind) {
  switch (kind) {
    case SubsetKind::SingleTiming: return "single";
    case SubsetKind::MultiWide: return "multi_wide";
    case SubsetKind::MultiNarrow: return "multi_narrow";
  }
  return "single";
}

inline std::optional<SubsetKind> parse_subset_label(std::string_view label) {
  for (SubsetKind k : kAllSubsets) {
    if (subset_label(k) == label) return k;
  }
  return std::nullopt;
}

/// Splits beatmaps by how their uninherited timing points are spaced. The
/// comparison runs on millisecond gaps so that e.g. 0 ms / 5000 ms lands
/// exactly on a 5 s threshold.
inline SubsetClass classify(const std::vector<TimingPoint>& timing_points, double threshold_s = 5.0) {
  if (!(threshold_s > 0.0)) throw Error(Errc::InvalidArgument, "threshold must be positive");
  std::vector<double> offsets_ms;
  for (const auto& tp : timing_points) {
    if (tp.uninherited) offsets_ms.push_back(tp.time_ms);
  }
  if (offsets_ms.empty()) throw Error(Errc::NoUninheritedPoints, "cannot classify without uninherited points");
  if (offsets_ms.size() == 1) return {SubsetKind::SingleTiming, std::nullopt};

  std::sort(offsets_ms.begin(), offsets_ms.end());
  double min_gap_ms = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < offsets_ms.size(); ++i) min_gap_ms = std::min(min_gap_ms, offsets_ms[i] - offsets_ms[i - 1]);

  const SubsetKind kind = min_gap_ms >= threshold_s * 1000.0 ? SubsetKind::MultiWide : SubsetKind::MultiNarrow;
  return {kind, min_gap_ms / 1000.0};
}

}  // namespace osubeats
