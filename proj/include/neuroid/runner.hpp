#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neuroid/config.hpp"
#include "neuroid/evaluation.hpp"
#include "neuroid/metrics.hpp"
#include "neuroid/preprocess.hpp"

namespace neuroid {

inline constexpr const char* kVersion = "0.1.0";

/// A dataset after loading and preprocessing for one sweep point.
struct PreparedDataset {
  std::string label;  ///< dataset column of results.csv
  DatasetConfig config;
  PreprocessParams params;
  EpochSet epochs;
  PreprocessStats stats;
  std::vector<std::string> subjects;  ///< after the `subjects` selection
  std::vector<std::string> notes;     ///< recordings that lost every epoch, etc.
};

/// Loads (synthetic or bundle) and preprocesses every selected recording, in
/// manifest order. Throws on unresolvable datasets or when nothing survives.
PreparedDataset prepare_dataset(const DatasetConfig& config, const std::string& label);

/// Bundle directory for a named dataset: `dataset_path`, else
/// $NEUROIDBENCH_DATA/<name>.
std::filesystem::path resolve_bundle_path(const DatasetConfig& config);

/// One (dataset sweep point, pipeline, scheme, attacker) combination.
struct CellResult {
  std::string id;  ///< file-system safe, unique within a run
  std::string dataset;
  std::string pipeline;
  Scheme scheme = Scheme::SingleSession;
  Attacker attacker = Attacker::Unknown;
  PreprocessParams preprocess;
  PreprocessStats stats;
  std::vector<std::string> notes;

  std::vector<ScoreSet> score_sets;
  std::vector<MetricsReport> reports;  ///< one per ScoreSet, same order
  std::vector<SkipRecord> skips;

  bool ok = true;
  std::string error;
  double wall_s = 0.0;
};

struct RunRecord {
  BenchmarkConfig config;  ///< resolved, CLI overrides applied
  std::vector<CellResult> cells;
  double wall_s = 0.0;
  int jobs = 1;

  bool all_ok() const;
};

struct RunOptions {
  int jobs = 1;
};

/// Every sweep point of every dataset, with its label, in run order.
std::vector<std::pair<DatasetConfig, std::string>> expand_sweeps(const BenchmarkConfig& config);

/// Executes every cell. A failing cell is recorded and the rest continue.
/// Output is independent of `jobs`.
RunRecord run(const BenchmarkConfig& config, const RunOptions& options = {});

}  // namespace neuroid
