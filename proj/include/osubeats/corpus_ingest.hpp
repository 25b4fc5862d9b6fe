#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"
#include "osubeats/osu_format.hpp"
#include "osubeats/partition.hpp"
#include "osubeats/zip_reader.hpp"

namespace osubeats {

namespace fs = std::filesystem;

struct CorpusEntry {
  std::int64_t beatmapset_id = -1;
  std::string audio_md5;
  fs::path audio_path;
  fs::path osu_path;
  BeatmapDifficulty chosen_difficulty;
  std::optional<SubsetClass> subset;
  fs::path source_archive;
};

struct FilterCriteria {
  std::int64_t min_favorites = 200;
  /// Game mode the chosen difficulty must use; negative disables the check.
  int require_mode = 0;
  /// Case-insensitive substring of the chosen difficulty name; empty disables.
  std::string require_difficulty_substring = "Insane";
  bool require_ranked = true;

  bool needs_sidecar() const { return min_favorites > 0 || require_ranked; }
};

struct SidecarRecord {
  std::int64_t favorites = 0;
  bool ranked = false;
};

using SidecarMetadata = std::map<std::int64_t, SidecarRecord>;

/// Lines "beatmapset_id<TAB>favorites<TAB>ranked(0|1)".
inline SidecarMetadata parse_sidecar(std::string_view text) {
  SidecarMetadata meta;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3) throw MalformedLineError(i + 1, std::string(lines[i]), "sidecar row needs 3 fields");
    auto id = detail::parse_int<std::int64_t>(fields[0]);
    auto favorites = detail::parse_int<std::int64_t>(fields[1]);
    auto ranked = detail::parse_int<int>(fields[2]);
    if (!id || *id <= 0) throw MalformedLineError(i + 1, std::string(lines[i]), "set id must be a positive integer");
    if (!favorites || *favorites < 0) throw MalformedLineError(i + 1, std::string(lines[i]), "bad favorites count");
    if (!ranked || (*ranked != 0 && *ranked != 1)) throw MalformedLineError(i + 1, std::string(lines[i]), "ranked must be 0 or 1");
    meta[*id] = {*favorites, *ranked == 1};
  }
  return meta;
}

inline bool is_audio_file(const fs::path& p) {
  const std::string ext = detail::to_lower(p.extension().string());
  return ext == ".mp3" || ext == ".ogg" || ext == ".wav";
}

inline bool is_osu_file(const fs::path& p) { return detail::to_lower(p.extension().string()) == ".osu"; }

namespace detail {

/// Member name as a relative path, or nullopt when it would escape the
/// extraction root.
inline std::optional<fs::path> safe_member_path(std::string name) {
  std::replace(name.begin(), name.end(), '\\', '/');
  if (name.empty() || name.front() == '/') return std::nullopt;
  if (name.size() >= 2 && name[1] == ':') return std::nullopt;
  fs::path rel;
  for (auto part : split(name, '/')) {
    if (part == "..") return std::nullopt;
    if (part.empty() || part == ".") continue;
    rel /= fs::path(std::string(part));
  }
  if (rel.empty()) return std::nullopt;
  return rel;
}

}  // namespace detail

/// Extracts every member of an .osz archive under `work_dir` and returns the
/// .osu and audio paths, sorted. Member names are all validated before the
/// first byte is written.
inline std::vector<fs::path> unpack_osz(const fs::path& archive_path, const fs::path& work_dir) {
  ZipReader zip(detail::read_binary(archive_path));

  std::vector<std::pair<const ZipMember*, fs::path>> plan;
  for (const auto& m : zip.members()) {
    auto rel = detail::safe_member_path(m.name);
    if (!rel) throw Error(Errc::UnsafeMemberPath, "member \"" + m.name + "\" escapes the extraction directory");
    plan.emplace_back(&m, *rel);
  }

  std::vector<fs::path> out;
  for (const auto& [member, rel] : plan) {
    const fs::path dest = work_dir / rel;
    std::error_code ec;
    if (member->is_directory()) {
      fs::create_directories(dest, ec);
      if (ec) throw Error(Errc::IoFailure, "cannot create " + dest.string());
      continue;
    }
    fs::create_directories(dest.parent_path(), ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create " + dest.parent_path().string());
    const auto bytes = zip.extract(*member);
    std::ofstream f(dest, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoFailure, "cannot write " + dest.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(Errc::IoFailure, "write failed for " + dest.string());
    if (is_osu_file(dest) || is_audio_file(dest)) out.push_back(dest);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// One difficulty per referenced audio file: a difficulty named "Insane"
/// wins, then the highest overall difficulty, then the smallest name.
inline std::map<std::string, BeatmapDifficulty> select_difficulty(const std::vector<BeatmapDifficulty>& difficulties) {
  auto rank = [](const BeatmapDifficulty& d) {
    return std::make_tuple(detail::icontains(d.version_name, "insane"), d.overall_difficulty);
  };
  std::map<std::string, BeatmapDifficulty> chosen;
  for (const auto& d : difficulties) {
    auto it = chosen.find(d.audio_filename);
    if (it == chosen.end()) {
      chosen.emplace(d.audio_filename, d);
      continue;
    }
    const auto& cur = it->second;
    if (rank(d) > rank(cur) || (rank(d) == rank(cur) && d.version_name < cur.version_name)) it->second = d;
  }
  return chosen;
}

struct FilterOutcome {
  std::vector<CorpusEntry> kept;
  /// Dropped entries with the reason, in input order.
  std::vector<std::pair<CorpusEntry, std::string>> dropped;
};

inline FilterOutcome filter_catalog(const std::vector<CorpusEntry>& entries, const SidecarMetadata& meta,
                                    const FilterCriteria& criteria) {
  if (criteria.min_favorites < 0) throw Error(Errc::InvalidArgument, "min_favorites must be >= 0");
  FilterOutcome out;
  for (const auto& entry : entries) {
    std::string reason;
    auto it = meta.find(entry.beatmapset_id);
    if (it == meta.end()) {
      if (criteria.needs_sidecar()) reason = "no metadata";
    } else if (criteria.require_ranked && !it->second.ranked) {
      reason = "not ranked";
    } else if (it->second.favorites < criteria.min_favorites) {
      reason = "favorites " + std::to_string(it->second.favorites) + " < " + std::to_string(criteria.min_favorites);
    }
    if (reason.empty() && criteria.require_mode >= 0 && entry.chosen_difficulty.mode != criteria.require_mode) {
      reason = "mode " + std::to_string(entry.chosen_difficulty.mode);
    }
    if (reason.empty() && !criteria.require_difficulty_substring.empty() &&
        !detail::icontains(entry.chosen_difficulty.version_name, criteria.require_difficulty_substring)) {
      reason = "no \"" + criteria.require_difficulty_substring + "\" difficulty";
    }
    if (reason.empty()) {
      out.kept.push_back(entry);
    } else {
      out.dropped.emplace_back(entry, reason);
    }
  }
  return out;
}

/// One catalog line: "audio_md5, beatmapset_id, audio_relpath, osu_relpath,
/// subset", paths relative to the extraction root.
struct CatalogRow {
  std::string audio_md5;
  std::int64_t beatmapset_id = -1;
  std::string audio_relpath;
  std::string osu_relpath;
  std::string subset;

  auto key() const { return std::tie(audio_md5, beatmapset_id, osu_relpath, audio_relpath, subset); }
  bool operator==(const CatalogRow& o) const { return key() == o.key(); }
  bool operator<(const CatalogRow& o) const { return key() < o.key(); }
};

inline std::string format_catalog(std::vector<CatalogRow> rows) {
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& r : rows) {
    out += r.audio_md5 + "\t" + std::to_string(r.beatmapset_id) + "\t" + r.audio_relpath + "\t" + r.osu_relpath + "\t" +
           r.subset + "\n";
  }
  return out;
}

inline std::vector<CatalogRow> parse_catalog(std::string_view text) {
  std::vector<CatalogRow> rows;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    auto f = detail::split(lines[i], '\t');
    auto id = f.size() == 5 ? detail::parse_int<std::int64_t>(f[1]) : std::nullopt;
    if (!id || f[0].size() != 32) throw MalformedLineError(i + 1, std::string(lines[i]), "bad catalog row");
    rows.push_back({std::string(f[0]), *id, std::string(f[2]), std::string(f[3]), std::string(f[4])});
  }
  return rows;
}

}  // namespace osubeats
