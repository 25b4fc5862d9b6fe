#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "osubeats/beat_grid.hpp"
#include "osubeats/corpus_ingest.hpp"
#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"
#include "osubeats/md5.hpp"
#include "osubeats/partition.hpp"

namespace osubeats {

enum class TimeUnit { Seconds, Milliseconds };

struct ExportRecord {
  std::string output_filename;
  std::string audio_md5;
  std::int64_t beatmapset_id = -1;
  SubsetKind subset = SubsetKind::SingleTiming;
  std::size_t n_beats = 0;
  std::size_t n_segments = 0;

  bool operator==(const ExportRecord&) const = default;
};

inline std::string annotation_filename(std::string_view audio_md5, std::int64_t beatmapset_id) {
  return std::string(audio_md5) + "_" + std::to_string(beatmapset_id) + "_beats_metered.txt";
}

/// One "time<TAB>index" line per beat. Seconds carry 6 decimals,
/// milliseconds 3, so both are exact to the microsecond.
inline std::string format_annotation(const BeatAnnotation& annotation, TimeUnit unit = TimeUnit::Seconds) {
  std::string out;
  out.reserve(annotation.size() * 14);
  for (const auto& e : annotation.events) {
    const double t = unit == TimeUnit::Seconds ? e.time_s : e.time_s * 1000.0;
    out += detail::format_fixed(t, unit == TimeUnit::Seconds ? 6 : 3);
    out += '\t';
    out += std::to_string(e.index);
    out += '\n';
  }
  return out;
}

/// Reads an exported annotation file back. Segment boundaries are not stored
/// in the file; every event gets segment 0.
inline BeatAnnotation parse_annotation(std::string_view text, TimeUnit unit = TimeUnit::Seconds) {
  BeatAnnotation out;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    auto f = detail::split(detail::trim(lines[i]), '\t');
    auto t = f.size() == 2 ? detail::parse_double(f[0]) : std::nullopt;
    const int index = f.size() == 2 ? detail::parse_int<int>(f[1]).value_or(0) : 0;
    if (!t || !std::isfinite(*t) || index < 1) {
      throw MalformedLineError(i + 1, std::string(lines[i]), "expected \"time<TAB>index\"");
    }
    const double time_s = unit == TimeUnit::Seconds ? *t : *t / 1000.0;
    if (!out.events.empty() && !(time_s > out.events.back().time_s)) {
      throw Error(Errc::NonMonotoneTimes, "annotation times must increase (line " + std::to_string(i + 1) + ")");
    }
    out.events.push_back({time_s, index, 0});
  }
  return out;
}

/// Writes `<md5>_<set>_beats_metered.txt` into `out_dir`. An existing file
/// with identical bytes is left alone; differing bytes are a collision.
inline ExportRecord write_annotation(const BeatAnnotation& annotation, SubsetKind subset, const fs::path& out_dir,
                                     TimeUnit unit = TimeUnit::Seconds) {
  if (annotation.empty()) throw Error(Errc::InvalidArgument, "refusing to export an empty annotation");
  ExportRecord rec;
  rec.output_filename = annotation_filename(annotation.source_md5, annotation.beatmapset_id);
  rec.audio_md5 = annotation.source_md5;
  rec.beatmapset_id = annotation.beatmapset_id;
  rec.subset = subset;
  rec.n_beats = annotation.size();
  rec.n_segments = annotation.segment_count();

  const std::string content = format_annotation(annotation, unit);
  const fs::path path = out_dir / rec.output_filename;
  std::error_code ec;
  if (fs::exists(path, ec)) {
    if (detail::read_text(path) == content) return rec;
    throw Error(Errc::NameCollisionWithDifferentContent, path.string() + " exists with different beats");
  }
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  detail::write_text_atomic(path, content);
  return rec;
}

/// Copies the entry's audio to `<out_dir>/<md5><ext>` and re-verifies the
/// digest. A present copy with the right digest is reused.
inline fs::path copy_audio(const CorpusEntry& entry, const fs::path& out_dir) {
  std::error_code ec;
  if (!fs::is_regular_file(entry.audio_path, ec)) {
    throw Error(Errc::IoFailure, "audio source missing: " + entry.audio_path.string());
  }
  const fs::path dest = out_dir / (entry.audio_md5 + detail::to_lower(entry.audio_path.extension().string()));
  if (fs::exists(dest, ec) && md5_file(dest) == entry.audio_md5) return dest;

  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string());
  const fs::path tmp = detail::staging_path(dest);
  fs::copy_file(entry.audio_path, tmp, fs::copy_options::overwrite_existing, ec);
  if (ec) throw Error(Errc::IoFailure, "copy of " + entry.audio_path.string() + " failed: " + ec.message());
  if (md5_file(tmp) != entry.audio_md5) {
    fs::remove(tmp, ec);
    throw Error(Errc::HashMismatch, "copied audio does not hash to " + entry.audio_md5);
  }
  fs::rename(tmp, dest, ec);
  if (ec) throw Error(Errc::IoFailure, "rename to " + dest.string() + " failed: " + ec.message());
  return dest;
}

inline std::string format_manifest(std::vector<ExportRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ExportRecord& a, const ExportRecord& b) { return a.output_filename < b.output_filename; });
  std::string out = "filename\tmd5\tbeatmapset_id\tsubset\tn_beats\tn_segments\n";
  for (const auto& r : records) {
    out += r.output_filename + "\t" + r.audio_md5 + "\t" + std::to_string(r.beatmapset_id) + "\t" +
           std::string(subset_label(r.subset)) + "\t" + std::to_string(r.n_beats) + "\t" +
           std::to_string(r.n_segments) + "\n";
  }
  return out;
}

inline void write_manifest(const std::vector<ExportRecord>& records, const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  detail::write_text_atomic(path, format_manifest(records));
}

}  // namespace osubeats
