#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neuroid/classifiers.hpp"
#include "neuroid/evaluation.hpp"
#include "neuroid/features.hpp"
#include "neuroid/preprocess.hpp"
#include "neuroid/synthgen.hpp"
#include "neuroid/twin.hpp"

namespace neuroid {

/// Registry keys accepted as dataset names.
inline constexpr const char* kSyntheticDataset = "Synthetic";
inline constexpr const char* kUserDataset = "UserDataset";

/// Names of the real datasets an exported bundle may stand for.
const std::vector<std::string>& known_datasets();

struct DatasetConfig {
  std::string name;
  /// Keep the first N subjects in manifest order.
  std::optional<int> subjects;
  double tmin_s = -0.2;
  double tmax_s = 0.8;
  std::optional<double> rejection_threshold_uv;
  /// Absent: (tmin, 0) when tmin < 0, otherwise no correction.
  std::optional<std::pair<double, double>> baseline_s;
  bool baseline_disabled = false;
  double band_low_hz = 1.0;
  double band_high_hz = 50.0;
  std::optional<double> resample_hz;
  std::vector<int> event_codes;
  std::optional<std::string> dataset_path;
  /// Used only by the synthetic dataset.
  SynthConfig synth;

  bool is_synthetic() const { return name == kSyntheticDataset; }
  bool operator==(const DatasetConfig&) const = default;
};

/// Resolved preprocessing parameters for one dataset and sweep point.
PreprocessParams preprocess_params(const DatasetConfig& dataset);

struct PipelineConfig {
  std::string name;
  /// Step names in file order, for reporting.
  std::vector<std::string> steps;
  FeatureRecipe features;
  ClassifierSpec classifier;
  std::optional<TwinConfig> twin;

  bool is_twin() const { return twin.has_value(); }
  bool operator==(const PipelineConfig&) const = default;
};

struct SweepConfig {
  std::vector<std::pair<double, double>> intervals;
  /// std::nullopt stands for "no rejection".
  std::vector<std::optional<double>> rejection_thresholds;

  bool empty() const { return intervals.empty() && rejection_thresholds.empty(); }
  bool operator==(const SweepConfig&) const = default;
};

struct BenchmarkConfig {
  std::string name;
  std::vector<DatasetConfig> datasets;
  std::vector<PipelineConfig> pipelines;
  EvalPlan evaluation;
  SweepConfig sweeps;

  bool operator==(const BenchmarkConfig&) const = default;
};

/// Parses YAML text. Every failure is a ConfigError whose message begins with
/// the YAML path (e.g. `pipelines.AR+SVM[1].parameters.C`) or a line number.
BenchmarkConfig parse_config(const std::string& text);
BenchmarkConfig load_config(const std::filesystem::path& path);

/// YAML with every default written out; parse_config(emit_config(c)) == c.
std::string emit_config(const BenchmarkConfig& config);

}  // namespace neuroid
