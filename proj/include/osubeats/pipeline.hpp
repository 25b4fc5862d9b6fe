#pragma once

// Batch orchestration behind the command-line tool: extract, evaluate,
// agreement and partition-stats. Work fans out over a fixed pool of threads;
// every shared output is assembled afterwards and sorted, so results do not
// depend on the worker count.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "osubeats/agreement.hpp"
#include "osubeats/audio_probe.hpp"
#include "osubeats/beat_eval.hpp"
#include "osubeats/beat_grid.hpp"
#include "osubeats/corpus_ingest.hpp"
#include "osubeats/dataset_export.hpp"
#include "osubeats/detail/text.hpp"
#include "osubeats/error.hpp"
#include "osubeats/md5.hpp"
#include "osubeats/osu_format.hpp"
#include "osubeats/partition.hpp"

namespace osubeats {

struct PipelineConfig {
  fs::path input_dir;
  fs::path output_dir;
  fs::path work_dir;
  double threshold_s = 5.0;
  double f_window_s = 0.07;
  double phase_tol = 0.175;
  double period_tol = 0.175;
  bool trim_lead_in = true;
  std::optional<fs::path> duration_overrides;
  std::optional<fs::path> sidecar_metadata;
  std::optional<SubsetKind> subset_filter;
  unsigned workers = 1;
  FilterCriteria criteria;
  bool trim_to_effective_end = false;
  TimeUnit time_unit = TimeUnit::Seconds;

  void validate() const {
    if (!(threshold_s > 0.0)) throw Error(Errc::InvalidArgument, "threshold must be positive");
    if (workers == 0) throw Error(Errc::InvalidArgument, "workers must be positive");
    eval_config().validate();
  }

  EvalConfig eval_config() const {
    EvalConfig c;
    c.f_window_s = f_window_s;
    c.phase_tol = phase_tol;
    c.period_tol = period_tol;
    c.trim_lead_in = trim_lead_in;
    return c;
  }

  nlohmann::json to_json() const {
    auto opt_path = [](const std::optional<fs::path>& p) -> nlohmann::json {
      return p ? nlohmann::json(p->generic_string()) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["input_dir"] = input_dir.generic_string();
    j["output_dir"] = output_dir.generic_string();
    j["work_dir"] = work_dir.generic_string();
    j["threshold_s"] = threshold_s;
    j["f_window_s"] = f_window_s;
    j["phase_tol"] = phase_tol;
    j["period_tol"] = period_tol;
    j["trim_lead_in"] = trim_lead_in;
    j["duration_overrides"] = opt_path(duration_overrides);
    j["sidecar_metadata"] = opt_path(sidecar_metadata);
    j["subset_filter"] = subset_filter ? nlohmann::json(std::string(subset_label(*subset_filter))) : nlohmann::json(nullptr);
    j["workers"] = workers;
    j["min_favorites"] = criteria.min_favorites;
    j["require_mode"] = criteria.require_mode;
    j["require_difficulty"] = criteria.require_difficulty_substring;
    j["require_ranked"] = criteria.require_ranked;
    j["trim_to_effective_end"] = trim_to_effective_end;
    j["time_unit"] = time_unit == TimeUnit::Seconds ? "s" : "ms";
    return j;
  }
};

/// File names inside the output directory.
namespace layout {
inline constexpr const char* kAnnotations = "annotations";
inline constexpr const char* kAudio = "audio";
inline constexpr const char* kCatalog = "catalog.tsv";
inline constexpr const char* kManifest = "manifest.tsv";
inline constexpr const char* kErrors = "errors.tsv";
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kScores = "evaluation_scores.tsv";
inline constexpr const char* kSummaryByAnnotation = "summary_by_annotation.tsv";
inline constexpr const char* kSummaryByAudio = "summary_by_audio.tsv";
inline constexpr const char* kEvaluationErrors = "evaluation_errors.tsv";
inline constexpr const char* kAgreement = "agreement.tsv";
inline constexpr const char* kAgreementMeters = "agreement_meters.tsv";
inline constexpr const char* kPartitionStats = "partition_stats.tsv";
}  // namespace layout

/// One row of a per-entry failure log: what failed, a short code, the detail.
struct LogRow {
  std::string source;
  std::string code;
  std::string message;

  auto key() const { return std::tie(source, code, message); }
  bool operator<(const LogRow& o) const { return key() < o.key(); }
};

namespace detail {

inline std::string one_line(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

inline std::string format_log(std::vector<LogRow> rows) {
  std::sort(rows.begin(), rows.end());
  std::string out = "source\tcode\tmessage\n";
  for (const auto& r : rows) out += one_line(r.source) + "\t" + r.code + "\t" + one_line(r.message) + "\n";
  return out;
}

inline LogRow log_error(const std::string& source, const std::exception& ex) {
  if (auto* e = dynamic_cast<const Error*>(&ex)) return {source, std::string(to_string(e->code())), e->what()};
  return {source, "Exception", ex.what()};
}

/// Runs `task(i)` for i in [0, n) on up to `workers` threads.
template <typename Task>
void parallel_for(std::size_t n, unsigned workers, Task&& task) {
  const std::size_t pool = std::min<std::size_t>(std::max(1u, workers), n);
  if (pool <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& t : threads) t.join();
}

/// Set id from the conventional "<id> Artist - Title.osz" archive name.
inline std::optional<std::int64_t> set_id_from_archive_name(const fs::path& archive) {
  const std::string stem = archive.stem().string();
  std::size_t n = 0;
  while (n < stem.size() && stem[n] >= '0' && stem[n] <= '9') ++n;
  if (n == 0) return std::nullopt;
  auto id = parse_int<std::int64_t>(std::string_view(stem).substr(0, n));
  if (!id || *id <= 0) return std::nullopt;
  return id;
}

inline std::map<std::string, double> load_duration_overrides(const fs::path& path) {
  std::map<std::string, double> out;
  const std::string text = read_text(path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    auto secs = f.size() == 2 ? parse_double(f[1]) : std::nullopt;
    if (!secs || !(*secs > 0.0)) throw MalformedLineError(i + 1, std::string(lines[i]), "expected \"md5<TAB>seconds\"");
    out[to_lower(trim(f[0]))] = *secs;
  }
  return out;
}

inline std::vector<fs::path> list_archives(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::EmptyInput, dir.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && to_lower(e.path().extension().string()) == ".osz") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string relative_generic(const fs::path& p, const fs::path& base) {
  return p.lexically_relative(base).generic_string();
}

struct ArchiveOutcome {
  std::vector<std::pair<CatalogRow, ExportRecord>> exports;
  std::vector<LogRow> log;
};

struct ExtractContext {
  const PipelineConfig& config;
  const std::optional<SidecarMetadata>& sidecar;
  const std::map<std::string, double>& overrides;
};

inline ArchiveOutcome process_archive(const fs::path& archive, const ExtractContext& ctx) {
  const PipelineConfig& config = ctx.config;
  ArchiveOutcome out;
  const std::string source = archive.filename().string();
  const fs::path set_dir = config.work_dir / archive.stem();

  std::vector<fs::path> members;
  try {
    std::error_code ec;
    fs::remove_all(set_dir, ec);
    members = unpack_osz(archive, set_dir);
  } catch (const std::exception& ex) {
    out.log.push_back(log_error(source, ex));
    return out;
  }

  std::vector<BeatmapDifficulty> difficulties;
  std::vector<fs::path> osu_paths;
  std::vector<fs::path> audio_paths;
  for (const auto& m : members) {
    if (is_audio_file(m)) {
      audio_paths.push_back(m);
      continue;
    }
    try {
      difficulties.push_back(parse_osu(read_text(m)));
      osu_paths.push_back(m);
    } catch (const std::exception& ex) {
      out.log.push_back(log_error(source + ":" + relative_generic(m, set_dir), ex));
    }
  }
  if (difficulties.empty()) {
    if (osu_paths.empty() && out.log.empty()) out.log.push_back({source, "EmptyInput", "archive has no .osu members"});
    return out;
  }

  for (const auto& [audio_name, diff] : select_difficulty(difficulties)) {
    const std::string entry_source = source + ":" + audio_name;
    try {
      const std::size_t pick =
          static_cast<std::size_t>(std::find(difficulties.begin(), difficulties.end(), diff) - difficulties.begin());

      CorpusEntry entry;
      entry.source_archive = archive;
      entry.chosen_difficulty = diff;
      entry.osu_path = osu_paths[pick];
      if (diff.beatmapset_id > 0) {
        entry.beatmapset_id = diff.beatmapset_id;
      } else if (auto id = set_id_from_archive_name(archive)) {
        entry.beatmapset_id = *id;
      } else {
        throw Error(Errc::MissingSetId, "no BeatmapSetID in file or archive name");
      }

      if (audio_name.empty()) throw Error(Errc::MissingAudio, "difficulty has no AudioFilename");
      auto audio = std::find_if(audio_paths.begin(), audio_paths.end(), [&](const fs::path& p) {
        return iequals(relative_generic(p, set_dir), fs::path(audio_name).generic_string());
      });
      if (audio == audio_paths.end()) throw Error(Errc::MissingAudio, "\"" + audio_name + "\" not in archive");
      entry.audio_path = *audio;
      entry.audio_md5 = md5_file(entry.audio_path);

      if (ctx.sidecar) {
        auto filtered = filter_catalog({entry}, *ctx.sidecar, config.criteria);
        if (filtered.kept.empty()) {
          out.log.push_back({entry_source, "Filtered", filtered.dropped.front().second});
          continue;
        }
      }

      const SubsetClass subset = classify(diff.timing_points, config.threshold_s);
      entry.subset = subset;
      if (config.subset_filter && subset.kind != *config.subset_filter) {
        out.log.push_back({entry_source, "Filtered", "subset " + std::string(subset_label(subset.kind))});
        continue;
      }

      std::optional<AudioInfo> info;
      std::string probe_note;
      if (to_lower(entry.audio_path.extension().string()) == ".mp3") {
        try {
          info = mp3_duration(read_binary(entry.audio_path));
        } catch (const Error& e) {
          probe_note = std::string("; probe: ") + e.what();
        }
      } else {
        probe_note = "; probe: unsupported audio format " + entry.audio_path.extension().string();
      }
      std::optional<double> override_s;
      if (auto it = ctx.overrides.find(entry.audio_md5); it != ctx.overrides.end()) override_s = it->second;
      double duration = 0.0;
      try {
        duration = resolve_duration(info, override_s);
      } catch (const Error& e) {
        throw Error(e.code(), e.what() + probe_note);
      }

      BeatAnnotation grid = generate_grid(diff.timing_points, duration);
      grid.source_md5 = entry.audio_md5;
      grid.beatmapset_id = entry.beatmapset_id;
      if (config.trim_to_effective_end && !diff.hit_object_times_ms.empty()) {
        grid = truncate_to_effective_end(grid, diff.hit_object_times_ms.back() / 1000.0);
      }

      ExportRecord rec = write_annotation(grid, subset.kind, config.output_dir / layout::kAnnotations, config.time_unit);
      copy_audio(entry, config.output_dir / layout::kAudio);
      CatalogRow row{entry.audio_md5, entry.beatmapset_id, relative_generic(entry.audio_path, config.work_dir),
                     relative_generic(entry.osu_path, config.work_dir), std::string(subset_label(subset.kind))};
      out.exports.emplace_back(std::move(row), std::move(rec));
    } catch (const std::exception& ex) {
      out.log.push_back(log_error(entry_source, ex));
    }
  }
  return out;
}

inline std::vector<CatalogRow> load_catalog(const PipelineConfig& config) {
  const fs::path path = config.output_dir / layout::kCatalog;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(Errc::IoFailure, "no catalog at " + path.string() + "; run extract first");
  auto rows = parse_catalog(read_text(path));
  if (config.subset_filter) {
    std::erase_if(rows, [&](const CatalogRow& r) { return r.subset != subset_label(*config.subset_filter); });
  }
  return rows;
}

inline BeatAnnotation load_annotation(const PipelineConfig& config, const CatalogRow& row) {
  auto a = parse_annotation(
      read_text(config.output_dir / layout::kAnnotations / annotation_filename(row.audio_md5, row.beatmapset_id)),
      config.time_unit);
  a.source_md5 = row.audio_md5;
  a.beatmapset_id = row.beatmapset_id;
  return a;
}

}  // namespace detail

/// Exit statuses of the command-line tool.
enum class ExitCode : int { Success = 0, Usage = 1, NoWork = 2, NoSuccesses = 3 };

struct ExtractResult {
  std::size_t archives = 0;
  std::vector<ExportRecord> records;
  std::vector<CatalogRow> catalog;
  std::vector<LogRow> log;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const LogRow& r) { return r.code != "Filtered"; }));
  }

  ExitCode exit_code() const {
    if (!records.empty()) return ExitCode::Success;
    return failures() > 0 ? ExitCode::NoSuccesses : ExitCode::NoWork;
  }
};

inline ExtractResult cmd_extract(const PipelineConfig& config) {
  config.validate();
  const auto archives = detail::list_archives(config.input_dir);
  if (archives.empty()) throw Error(Errc::EmptyInput, "no .osz archives in " + config.input_dir.string());

  std::optional<SidecarMetadata> sidecar;
  if (config.sidecar_metadata) sidecar = parse_sidecar(detail::read_text(*config.sidecar_metadata));
  std::map<std::string, double> overrides;
  if (config.duration_overrides) overrides = detail::load_duration_overrides(*config.duration_overrides);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + config.output_dir.string());
  fs::create_directories(config.work_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + config.work_dir.string());

  const detail::ExtractContext ctx{config, sidecar, overrides};
  std::vector<detail::ArchiveOutcome> outcomes(archives.size());
  detail::parallel_for(archives.size(), config.workers,
                       [&](std::size_t i) { outcomes[i] = detail::process_archive(archives[i], ctx); });

  ExtractResult result;
  result.archives = archives.size();
  for (auto& o : outcomes) {
    for (auto& [row, rec] : o.exports) {
      result.catalog.push_back(std::move(row));
      result.records.push_back(std::move(rec));
    }
    result.log.insert(result.log.end(), o.log.begin(), o.log.end());
  }
  std::sort(result.catalog.begin(), result.catalog.end());
  std::sort(result.records.begin(), result.records.end(),
            [](const ExportRecord& a, const ExportRecord& b) { return a.output_filename < b.output_filename; });
  std::sort(result.log.begin(), result.log.end());

  detail::write_text_atomic(config.output_dir / layout::kCatalog, format_catalog(result.catalog));
  write_manifest(result.records, config.output_dir / layout::kManifest);
  detail::write_text_atomic(config.output_dir / layout::kErrors, detail::format_log(result.log));
  detail::write_text_atomic(config.output_dir / layout::kConfig, config.to_json().dump(2) + "\n");
  return result;
}

struct EvaluateResult {
  std::vector<SummaryRow> by_annotation;
  /// Duplicated audios first averaged per digest, then per subset.
  std::vector<SummaryRow> by_audio;
  std::size_t scored = 0;
  std::size_t missing_predictions = 0;
  std::vector<LogRow> log;

  ExitCode exit_code() const { return scored > 0 ? ExitCode::Success : ExitCode::NoSuccesses; }
};

/// Scores `<md5>.beats.txt` (and optional `<md5>.downbeats.txt`) files from
/// `predictions_dir` against every cataloged annotation with the same digest.
inline EvaluateResult cmd_evaluate(const PipelineConfig& config, const fs::path& predictions_dir) {
  config.validate();
  const auto rows = detail::load_catalog(config);
  const EvalConfig eval = config.eval_config();

  struct Slot {
    bool matched = false;
    std::optional<EvalScores> scores;
    std::optional<LogRow> error;
  };
  std::vector<Slot> slots(rows.size());
  detail::parallel_for(rows.size(), config.workers, [&](std::size_t i) {
    const auto& row = rows[i];
    const fs::path beats = predictions_dir / (row.audio_md5 + ".beats.txt");
    const fs::path downs = predictions_dir / (row.audio_md5 + ".downbeats.txt");
    std::error_code ec;
    if (!fs::exists(beats, ec)) return;
    slots[i].matched = true;
    const std::string source = annotation_filename(row.audio_md5, row.beatmapset_id);
    try {
      PredictionSet prediction = parse_predictions(detail::read_text(beats));
      if (fs::exists(downs, ec)) prediction.downbeat_times_s = parse_predictions(detail::read_text(downs)).beat_times_s;
      slots[i].scores = evaluate_pair(detail::load_annotation(config, row), prediction, eval);
    } catch (const std::exception& ex) {
      slots[i].error = detail::log_error(source, ex);
    }
  });

  EvaluateResult result;
  std::vector<std::pair<SubsetKind, EvalScores>> per_annotation;
  std::map<std::pair<SubsetKind, std::string>, std::vector<EvalScores>> per_audio;
  std::string scores_tsv = "filename\tsubset";
  for (auto name : EvalScores::kFieldNames) scores_tsv += "\t" + std::string(name);
  scores_tsv += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!slots[i].matched) {
      ++result.missing_predictions;
      continue;
    }
    if (slots[i].error) {
      result.log.push_back(*slots[i].error);
      continue;
    }
    auto kind = parse_subset_label(rows[i].subset);
    if (!kind) {
      result.log.push_back({rows[i].audio_md5, "MalformedLine", "unknown subset label " + rows[i].subset});
      continue;
    }
    const EvalScores& s = *slots[i].scores;
    ++result.scored;
    per_annotation.emplace_back(*kind, s);
    per_audio[{*kind, rows[i].audio_md5}].push_back(s);
    scores_tsv += annotation_filename(rows[i].audio_md5, rows[i].beatmapset_id) + "\t" + rows[i].subset;
    for (double v : s.values()) scores_tsv += "\t" + detail::format_shortest(v);
    scores_tsv += "\n";
  }
  if (result.scored == 0 && result.missing_predictions == rows.size()) {
    throw Error(Errc::NoPredictionsMatched, "no prediction file matches a cataloged digest in " + predictions_dir.string());
  }

  std::vector<std::pair<SubsetKind, EvalScores>> audio_means;
  for (const auto& [key, list] : per_audio) {
    std::array<double, 10> sums{};
    for (const auto& s : list) {
      const auto v = s.values();
      for (std::size_t j = 0; j < v.size(); ++j) sums[j] += v[j];
    }
    for (double& x : sums) x /= static_cast<double>(list.size());
    audio_means.emplace_back(key.first, EvalScores::from_values(sums));
  }
  result.by_annotation = summarize(per_annotation);
  result.by_audio = summarize(audio_means);
  std::sort(result.log.begin(), result.log.end());

  detail::write_text_atomic(config.output_dir / layout::kScores, scores_tsv);
  detail::write_text_atomic(config.output_dir / layout::kSummaryByAnnotation, format_summary_tsv(result.by_annotation));
  detail::write_text_atomic(config.output_dir / layout::kSummaryByAudio, format_summary_tsv(result.by_audio));
  detail::write_text_atomic(config.output_dir / layout::kEvaluationErrors, detail::format_log(result.log));
  return result;
}

struct AgreementResult {
  std::vector<AgreementReport> reports;
  std::vector<LogRow> log;
};

/// Pairwise agreement for every audio digest annotated more than once.
inline AgreementResult cmd_agreement(const PipelineConfig& config) {
  config.validate();
  const auto groups = group_by_audio(detail::load_catalog(config));
  std::vector<std::pair<std::string, std::vector<CatalogRow>>> ordered(groups.begin(), groups.end());
  const EvalConfig eval = config.eval_config();

  std::vector<std::optional<AgreementReport>> reports(ordered.size());
  std::vector<std::optional<LogRow>> errors(ordered.size());
  detail::parallel_for(ordered.size(), config.workers, [&](std::size_t g) {
    auto members = ordered[g].second;
    std::sort(members.begin(), members.end(), [](const CatalogRow& a, const CatalogRow& b) {
      return std::tie(a.beatmapset_id, a.osu_relpath) < std::tie(b.beatmapset_id, b.osu_relpath);
    });
    try {
      std::vector<BeatAnnotation> annotations;
      std::vector<std::string> ids;
      for (const auto& m : members) {
        annotations.push_back(detail::load_annotation(config, m));
        ids.push_back(std::to_string(m.beatmapset_id));
      }
      reports[g] = pairwise_agreement(annotations, eval, ids);
    } catch (const std::exception& ex) {
      errors[g] = detail::log_error(ordered[g].first, ex);
    }
  });

  AgreementResult result;
  std::string rows = "md5\tid_i\tid_j\trelation\ttempo_ratio\tbeat_f\tbeat_amlt\tdownbeat_f\n";
  std::string meters = "md5\tid\tmeters\tsuggested\n";
  for (std::size_t g = 0; g < ordered.size(); ++g) {
    if (errors[g]) result.log.push_back(*errors[g]);
    if (!reports[g]) continue;
    const auto& r = *reports[g];
    rows += format_agreement_rows(r);
    for (std::size_t i = 0; i < r.annotation_ids.size(); ++i) {
      std::string seq;
      for (int m : r.meters[i]) seq += (seq.empty() ? "" : ",") + std::to_string(m);
      meters += r.audio_md5 + "\t" + r.annotation_ids[i] + "\t" + seq + "\t" + (r.suggested_interpretation[i] ? "1" : "0") + "\n";
    }
    result.reports.push_back(r);
  }
  detail::write_text_atomic(config.output_dir / layout::kAgreement, rows);
  detail::write_text_atomic(config.output_dir / layout::kAgreementMeters, meters);
  return result;
}

struct PartitionStats {
  std::array<std::size_t, 3> counts{};
  std::size_t total = 0;

  double fraction(SubsetKind k) const {
    return total == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(total);
  }

  std::string format() const {
    std::string out = "subset\tcount\tfraction\n";
    for (SubsetKind k : kAllSubsets) {
      out += std::string(subset_label(k)) + "\t" + std::to_string(counts[static_cast<std::size_t>(k)]) + "\t" +
             detail::format_fixed(fraction(k), 2) + "\n";
    }
    return out;
  }
};

inline PartitionStats cmd_partition_stats(const PipelineConfig& config) {
  config.validate();
  PipelineConfig all = config;
  all.subset_filter.reset();
  PartitionStats stats;
  for (const auto& row : detail::load_catalog(all)) {
    if (auto k = parse_subset_label(row.subset)) {
      ++stats.counts[static_cast<std::size_t>(*k)];
      ++stats.total;
    }
  }
  detail::write_text_atomic(config.output_dir / layout::kPartitionStats, stats.format());
  return stats;
}

}  // namespace osubeats
