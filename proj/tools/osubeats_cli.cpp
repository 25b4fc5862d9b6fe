// osubeats: build metered beat annotations from .osz archives and score
// beat trackers against them.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "osubeats/osubeats.hpp"

namespace {

using osubeats::Errc;
using osubeats::ExitCode;
using osubeats::PipelineConfig;

int code(ExitCode c) { return static_cast<int>(c); }

int exit_for(const osubeats::Error& e) {
  switch (e.code()) {
    case Errc::EmptyInput:
    case Errc::NoPredictionsMatched:
      return code(ExitCode::NoWork);
    case Errc::InvalidArgument:
    case Errc::MalformedLine:
      return code(ExitCode::Usage);
    default:
      return code(ExitCode::NoSuccesses);
  }
}

void add_common(CLI::App& sub, PipelineConfig& cfg, std::string& subset) {
  sub.add_option("--output-dir", cfg.output_dir, "Dataset directory (annotations, catalog, reports)")->required();
  sub.add_option("--work-dir", cfg.work_dir, "Scratch directory for unpacked archives (default: <output-dir>/work)");
  sub.add_option("--threshold-s", cfg.threshold_s, "Gap separating wide from narrow multi-timing maps")
      ->capture_default_str();
  sub.add_option("--f-window-s", cfg.f_window_s, "F-measure tolerance window")->capture_default_str();
  sub.add_option("--phase-tol", cfg.phase_tol, "Continuity phase tolerance")->capture_default_str();
  sub.add_option("--period-tol", cfg.period_tol, "Continuity period tolerance")->capture_default_str();
  sub.add_flag("--trim-lead-in,!--no-trim-lead-in", cfg.trim_lead_in, "Ignore the first 5 s when scoring");
  sub.add_option("--subset-filter", subset, "Restrict to one subset")
      ->check(CLI::IsMember({"single", "multi_wide", "multi_narrow"}));
  sub.add_option("--workers", cfg.workers, "Worker threads")->envname("OSUBEATS_WORKERS")->check(CLI::PositiveNumber);
  sub.add_option_function<std::string>(
         "--time-unit",
         [&cfg](const std::string& unit) {
           cfg.time_unit = unit == "ms" ? osubeats::TimeUnit::Milliseconds : osubeats::TimeUnit::Seconds;
         },
         "Annotation time unit (default s)")
      ->check(CLI::IsMember({"s", "ms"}));
}

void print_log(const std::vector<osubeats::LogRow>& log) {
  for (const auto& r : log) {
    if (r.code != "Filtered") std::cerr << r.source << ": " << r.code << ": " << r.message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beat and downbeat datasets from Osu! beatmap archives"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  cfg.workers = std::max(1u, std::thread::hardware_concurrency());
  std::string subset;
  std::filesystem::path predictions_dir;

  auto* extract = app.add_subcommand("extract", "Unpack archives, build grids, export the dataset");
  add_common(*extract, cfg, subset);
  extract->add_option("--input-dir", cfg.input_dir, "Directory of .osz archives")->required();
  extract->add_option("--duration-overrides", cfg.duration_overrides, "TSV of md5<TAB>seconds");
  extract->add_option("--sidecar-metadata", cfg.sidecar_metadata, "TSV of set_id<TAB>favorites<TAB>ranked");
  extract->add_option("--min-favorites", cfg.criteria.min_favorites)->capture_default_str();
  extract->add_option("--require-mode", cfg.criteria.require_mode, "Game mode (-1 for any)")->capture_default_str();
  extract->add_option("--require-difficulty", cfg.criteria.require_difficulty_substring, "Difficulty name substring")
      ->capture_default_str();
  extract->add_flag("--require-ranked,!--no-require-ranked", cfg.criteria.require_ranked);
  extract->add_flag("--trim-to-effective-end", cfg.trim_to_effective_end, "Drop beats after the last hit object");

  auto* evaluate = app.add_subcommand("evaluate", "Score <md5>.beats.txt predictions against the dataset");
  add_common(*evaluate, cfg, subset);
  evaluate->add_option("--predictions-dir", predictions_dir, "Directory of tracker output")->required();

  auto* agreement = app.add_subcommand("agreement", "Compare annotations that share an audio file");
  add_common(*agreement, cfg, subset);

  auto* stats = app.add_subcommand("partition-stats", "Count cataloged entries per subset");
  add_common(*stats, cfg, subset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::Usage);
  }

  if (!subset.empty()) cfg.subset_filter = osubeats::parse_subset_label(subset);
  if (cfg.work_dir.empty()) cfg.work_dir = cfg.output_dir / "work";

  try {
    if (extract->parsed()) {
      const auto r = osubeats::cmd_extract(cfg);
      print_log(r.log);
      std::cout << "archives " << r.archives << ", exported " << r.records.size() << ", failed " << r.failures()
                << ", filtered " << r.log.size() - r.failures() << "\n";
      return code(r.exit_code());
    }
    if (evaluate->parsed()) {
      const auto r = osubeats::cmd_evaluate(cfg, predictions_dir);
      print_log(r.log);
      std::cout << "per annotation\n" << osubeats::format_summary_table(r.by_annotation);
      std::cout << "per audio\n" << osubeats::format_summary_table(r.by_audio);
      std::cout << "scored " << r.scored << ", missing predictions " << r.missing_predictions << ", failed "
                << r.log.size() << "\n";
      return code(r.exit_code());
    }
    if (agreement->parsed()) {
      const auto r = osubeats::cmd_agreement(cfg);
      print_log(r.log);
      std::cout << "groups " << r.reports.size() << "\n";
      return code(r.reports.empty() && !r.log.empty() ? ExitCode::NoSuccesses : ExitCode::Success);
    }
    const auto r = osubeats::cmd_partition_stats(cfg);
    std::cout << r.format();
    return code(ExitCode::Success);
  } catch (const osubeats::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code(ExitCode::NoSuccesses);
  }
}
