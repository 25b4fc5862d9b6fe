#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osubeats/error.hpp"
#include "osubeats/osu_format.hpp"

namespace osubeats {

struct BeatEvent {
  double time_s = 0.0;
  /// 1-based position within the measure; 1 is a downbeat.
  int index = 1;
  /// Which uninherited timing point (0-based, among uninherited points only)
  /// produced this beat.
  int segment = 0;

  bool operator==(const BeatEvent&) const = default;
};

struct BeatAnnotation {
  std::vector<BeatEvent> events;
  std::string source_md5;
  std::int64_t beatmapset_id = -1;

  bool empty() const { return events.empty(); }
  std::size_t size() const { return events.size(); }

  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.time_s);
    return out;
  }

  /// Number of distinct segment values (i.e. timing points that produced beats).
  std::size_t segment_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (i == 0 || events[i].segment != events[i - 1].segment) ++n;
    }
    return n;
  }
};

/// A beat landing within this distance of the next segment's offset (or the
/// end of the audio) is dropped; the next segment emits its own first beat.
inline constexpr double kSegmentBoundaryGuardS = 0.001;

/// Beat grid from the uninherited timing points: each point emits
/// offset + k * beat_length until the next uninherited point or `end_time_s`.
/// Every segment restarts its measure at index 1. Beats falling before zero
/// are skipped by whole beats, keeping their place in the measure cycle.
/// Inherited points are ignored; input must already be sorted by time.
inline BeatAnnotation generate_grid(const std::vector<TimingPoint>& timing_points, double end_time_s) {
  if (!(end_time_s > 0.0) || !std::isfinite(end_time_s)) {
    throw Error(Errc::InvalidArgument, "end time must be positive, got " + std::to_string(end_time_s));
  }

  std::vector<const TimingPoint*> red;
  for (const auto& tp : timing_points) {
    if (!tp.uninherited) continue;
    if (!(tp.beat_length_ms > 0.0) || !std::isfinite(tp.beat_length_ms)) {
      throw Error(Errc::NonPositiveBeatLength,
                  "uninherited point at " + std::to_string(tp.time_ms) + " ms has beat length " +
                      std::to_string(tp.beat_length_ms));
    }
    if (tp.meter < 1) throw Error(Errc::InvalidArgument, "meter must be >= 1");
    red.push_back(&tp);
  }
  if (red.empty()) throw Error(Errc::NoUninheritedPoints, "no uninherited timing points");

  BeatAnnotation out;
  for (std::size_t seg = 0; seg < red.size(); ++seg) {
    const double offset = red[seg]->time_ms / 1000.0;
    const double beat = red[seg]->beat_length_ms / 1000.0;
    const int meter = red[seg]->meter;
    const double limit = seg + 1 < red.size() ? std::min(red[seg + 1]->time_ms / 1000.0, end_time_s) : end_time_s;
    const double bound = limit - kSegmentBoundaryGuardS;

    std::int64_t k = 0;
    if (offset < 0.0) {
      k = static_cast<std::int64_t>(std::ceil(-offset / beat));
      while (offset + static_cast<double>(k) * beat < 0.0) ++k;
      while (k > 0 && offset + static_cast<double>(k - 1) * beat >= 0.0) --k;
    }
    for (;; ++k) {
      const double t = offset + static_cast<double>(k) * beat;
      if (!(t < bound)) break;
      out.events.push_back({t, static_cast<int>(k % meter) + 1, static_cast<int>(seg)});
    }
  }
  return out;
}

inline std::vector<double> downbeats(const BeatAnnotation& annotation) {
  std::vector<double> out;
  for (const auto& e : annotation.events) {
    if (e.index == 1) out.push_back(e.time_s);
  }
  return out;
}

/// Drops beats later than `last_hit_s + slack_s`. Without an explicit slack
/// the beat length of the final segment is used.
inline BeatAnnotation truncate_to_effective_end(const BeatAnnotation& annotation, double last_hit_s,
                                                std::optional<double> slack_s = std::nullopt) {
  double slack = 0.0;
  if (slack_s) {
    if (*slack_s < 0.0) throw Error(Errc::InvalidArgument, "slack must be >= 0");
    slack = *slack_s;
  } else {
    const auto& ev = annotation.events;
    if (ev.size() >= 2 && ev[ev.size() - 1].segment == ev[ev.size() - 2].segment) {
      slack = ev[ev.size() - 1].time_s - ev[ev.size() - 2].time_s;
    }
  }
  BeatAnnotation out = annotation;
  const double cutoff = last_hit_s + slack;
  std::erase_if(out.events, [cutoff](const BeatEvent& e) { return e.time_s > cutoff; });
  return out;
}

}  // namespace osubeats
