#pragma once

#include <cstdint>
#include <vector>

#include "neuroid/bundle_io.hpp"

namespace neuroid {

struct SynthConfig {
  int n_subjects = 10;
  int n_sessions = 1;
  int epochs_per_session = 100;
  double sampling_rate_hz = 256.0;
  int n_channels = 8;
  double erp_latency_ms = 300.0;
  double erp_width_ms = 80.0;
  double subject_separability = 0.8;
  double session_drift = 0.0;
  double noise_std_uv = 5.0;
  /// Probability per event of a 500 uV artifact inside the epoch window.
  double artifact_rate = 0.0;
  std::uint64_t seed = 1;

  bool operator==(const SynthConfig&) const = default;
};

void validate(const SynthConfig& config);

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<RawRecording> recordings;
};

/// Deterministic multi-subject, multi-session ERP recordings. Signal values
/// are rounded to single precision so the result survives a bundle round trip
/// unchanged.
SynthDataset generate(const SynthConfig& config);

/// Event code used for every synthetic stimulus.
inline constexpr int kSynthEventCode = 1;

}  // namespace neuroid
