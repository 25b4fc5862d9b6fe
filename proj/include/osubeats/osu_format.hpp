#pragma once

// Reader (and canonical writer) for the plain-text .osu beatmap format.
//
// Only the parts needed for beat extraction are modelled: [General] audio
// reference and mode, [Metadata] names and set id, [Difficulty] overall
// difficulty, every [TimingPoints] line and the time column of [HitObjects].
// Unknown sections and keys are ignored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"

namespace osubeats {

struct TimingPoint {
  double time_ms = 0.0;
  /// Milliseconds per beat for uninherited points; a negative velocity
  /// multiplier placeholder for inherited ones.
  double beat_length_ms = 0.0;
  int meter = 4;
  int sample_set = 0;
  int sample_index = 0;
  int volume = 100;
  bool uninherited = true;
  int effects = 0;

  /// Effects bit marking a barline the editor omits. Recorded, not acted on.
  static constexpr int kOmitFirstBarline = 8;

  bool operator==(const TimingPoint&) const = default;
};

struct BeatmapDifficulty {
  int format_version = 0;
  std::string audio_filename;
  int mode = 0;
  std::string version_name;
  /// -1 when the file does not carry a set id (common before v10).
  std::int64_t beatmapset_id = -1;
  double overall_difficulty = 5.0;
  std::vector<TimingPoint> timing_points;
  std::vector<double> hit_object_times_ms;
  std::string title;
  std::string artist;

  bool operator==(const BeatmapDifficulty&) const = default;

  std::size_t uninherited_count() const {
    return static_cast<std::size_t>(std::count_if(timing_points.begin(), timing_points.end(),
                                                  [](const TimingPoint& tp) { return tp.uninherited; }));
  }
};

namespace detail {

inline double parse_finite(std::string_view field, std::size_t line_no, std::string_view raw, const char* what) {
  auto value = parse_double(field);
  if (!value || !std::isfinite(*value)) {
    throw MalformedLineError(line_no, std::string(raw), std::string("bad ") + what);
  }
  return *value;
}

template <typename Int>
Int parse_int_or(std::string_view field, Int fallback, std::size_t line_no, std::string_view raw, const char* what) {
  if (trim(field).empty()) return fallback;
  // Some exporters write integral fields as "4.0".
  if (auto v = parse_int<long long>(field)) return static_cast<Int>(*v);
  if (auto d = parse_double(field); d && std::isfinite(*d) && *d == std::floor(*d)) return static_cast<Int>(*d);
  throw MalformedLineError(line_no, std::string(raw), std::string("bad ") + what);
}

inline TimingPoint parse_timing_point_line_at(std::string_view line, std::size_t line_no) {
  const std::string_view raw = line;
  auto fields = split(trim(line), ',');
  if (fields.size() < 2) throw MalformedLineError(line_no, std::string(raw), "timing point needs at least 2 fields");

  TimingPoint tp;
  tp.time_ms = parse_finite(fields[0], line_no, raw, "time");
  tp.beat_length_ms = parse_finite(fields[1], line_no, raw, "beat length");
  if (fields.size() > 2) tp.meter = parse_int_or(fields[2], 4, line_no, raw, "meter");
  if (fields.size() > 3) tp.sample_set = parse_int_or(fields[3], 0, line_no, raw, "sample set");
  if (fields.size() > 4) tp.sample_index = parse_int_or(fields[4], 0, line_no, raw, "sample index");
  if (fields.size() > 5) tp.volume = parse_int_or(fields[5], 100, line_no, raw, "volume");
  tp.uninherited = tp.beat_length_ms > 0.0;
  if (fields.size() > 6 && !trim(fields[6]).empty()) {
    tp.uninherited = parse_int_or(fields[6], 0, line_no, raw, "uninherited flag") != 0;
  }
  if (fields.size() > 7) tp.effects = parse_int_or(fields[7], 0, line_no, raw, "effects");

  if (tp.meter < 1) throw MalformedLineError(line_no, std::string(raw), "meter must be >= 1");
  if (tp.effects < 0) throw MalformedLineError(line_no, std::string(raw), "effects must be >= 0");
  if (tp.uninherited && !(tp.beat_length_ms > 0.0)) {
    throw MalformedLineError(line_no, std::string(raw), "uninherited point with non-positive beat length");
  }
  return tp;
}

inline double parse_hit_object_time_at(std::string_view line, std::size_t line_no) {
  auto fields = split(trim(line), ',');
  if (fields.size() < 3) throw MalformedLineError(line_no, std::string(line), "hit object needs at least 3 fields");
  return parse_finite(fields[2], line_no, line, "hit object time");
}

inline bool is_skippable(std::string_view trimmed) {
  return trimmed.empty() || trimmed.substr(0, 2) == "//";
}

}  // namespace detail

/// Parses one [TimingPoints] line. Lines with fewer than 8 fields keep the
/// defaults for the missing tail and infer `uninherited` from the sign of the
/// beat length.
inline TimingPoint parse_timing_point_line(std::string_view line, int format_version = 14) {
  (void)format_version;  // field layout is positional in every version
  return detail::parse_timing_point_line_at(line, 0);
}

/// Times (third field) of [HitObjects] lines, in file order.
inline std::vector<double> parse_hit_object_times(const std::vector<std::string>& section_lines) {
  std::vector<double> times;
  times.reserve(section_lines.size());
  for (std::size_t i = 0; i < section_lines.size(); ++i) {
    std::string_view trimmed = detail::trim(section_lines[i]);
    if (detail::is_skippable(trimmed)) continue;
    times.push_back(detail::parse_hit_object_time_at(trimmed, i + 1));
  }
  return times;
}

inline BeatmapDifficulty parse_osu(std::string_view text) {
  constexpr std::string_view kHeader = "osu file format v";
  const auto lines = detail::split_lines(text);

  BeatmapDifficulty out;
  std::size_t i = 0;
  while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
  if (i == lines.size()) throw Error(Errc::MissingFormatHeader, "empty file");
  {
    std::string_view first = detail::trim(lines[i]);
    if (first.substr(0, kHeader.size()) != kHeader) {
      throw Error(Errc::MissingFormatHeader, "first line is \"" + std::string(first) + "\"");
    }
    auto version = detail::parse_int<int>(first.substr(kHeader.size()));
    if (!version) throw Error(Errc::MissingFormatHeader, "bad version in \"" + std::string(first) + "\"");
    out.format_version = *version;
    ++i;
  }

  std::string section;
  bool saw_general = false;
  for (; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = detail::trim(lines[i]);
    if (detail::is_skippable(line)) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = std::string(line.substr(1, line.size() - 2));
      if (section == "General") saw_general = true;
      continue;
    }

    if (section == "TimingPoints") {
      out.timing_points.push_back(detail::parse_timing_point_line_at(line, line_no));
      continue;
    }
    if (section == "HitObjects") {
      out.hit_object_times_ms.push_back(detail::parse_hit_object_time_at(line, line_no));
      continue;
    }
    if (section != "General" && section != "Metadata" && section != "Difficulty") continue;

    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    std::string_view key = detail::trim(line.substr(0, colon));
    std::string_view value = detail::trim(line.substr(colon + 1));
    auto bad = [&](const char* what) { return MalformedLineError(line_no, std::string(lines[i]), what); };

    if (section == "General") {
      if (key == "AudioFilename") {
        out.audio_filename = std::string(value);
      } else if (key == "Mode") {
        auto mode = detail::parse_int<int>(value);
        if (!mode) throw bad("bad Mode");
        out.mode = *mode;
      }
    } else if (section == "Metadata") {
      if (key == "Title") {
        out.title = std::string(value);
      } else if (key == "Artist") {
        out.artist = std::string(value);
      } else if (key == "Version") {
        out.version_name = std::string(value);
      } else if (key == "BeatmapSetID") {
        auto id = detail::parse_int<std::int64_t>(value);
        if (!id) throw bad("bad BeatmapSetID");
        out.beatmapset_id = *id;
      }
    } else if (key == "OverallDifficulty") {
      auto od = detail::parse_double(value);
      if (!od || !std::isfinite(*od)) throw bad("bad OverallDifficulty");
      out.overall_difficulty = *od;
    }
  }

  if (!saw_general) throw Error(Errc::MissingGeneralSection, "no [General] section");
  if (out.uninherited_count() == 0) throw Error(Errc::MissingTimingPoints, "no uninherited timing points");

  std::stable_sort(out.timing_points.begin(), out.timing_points.end(),
                   [](const TimingPoint& a, const TimingPoint& b) { return a.time_ms < b.time_ms; });
  std::stable_sort(out.hit_object_times_ms.begin(), out.hit_object_times_ms.end());
  return out;
}

/// Serializes to a minimal canonical .osu layout that parse_osu reads back
/// field-for-field.
inline std::string write_osu(const BeatmapDifficulty& map) {
  using detail::format_shortest;
  std::string out;
  out += "osu file format v" + std::to_string(map.format_version) + "\n\n";
  out += "[General]\n";
  out += "AudioFilename: " + map.audio_filename + "\n";
  out += "Mode: " + std::to_string(map.mode) + "\n\n";
  out += "[Metadata]\n";
  out += "Title:" + map.title + "\n";
  out += "Artist:" + map.artist + "\n";
  out += "Version:" + map.version_name + "\n";
  out += "BeatmapSetID:" + std::to_string(map.beatmapset_id) + "\n\n";
  out += "[Difficulty]\n";
  out += "OverallDifficulty:" + format_shortest(map.overall_difficulty) + "\n\n";
  out += "[TimingPoints]\n";
  for (const auto& tp : map.timing_points) {
    out += format_shortest(tp.time_ms) + "," + format_shortest(tp.beat_length_ms) + "," + std::to_string(tp.meter) +
           "," + std::to_string(tp.sample_set) + "," + std::to_string(tp.sample_index) + "," +
           std::to_string(tp.volume) + "," + (tp.uninherited ? "1" : "0") + "," + std::to_string(tp.effects) + "\n";
  }
  out += "\n[HitObjects]\n";
  for (double t : map.hit_object_times_ms) out += "256,192," + format_shortest(t) + ",1,0\n";
  return out;
}

}  // namespace osubeats
