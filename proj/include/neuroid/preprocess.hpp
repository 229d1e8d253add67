#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "neuroid/bundle_io.hpp"

namespace neuroid {

struct PreprocessParams {
  double band_low_hz = 1.0;
  double band_high_hz = 50.0;
  double epoch_tmin_s = -0.2;
  double epoch_tmax_s = 0.8;
  /// Absent means no baseline correction.
  std::optional<std::pair<double, double>> baseline_window_s = std::pair{-0.2, 0.0};
  std::optional<double> ptp_reject_uv;
  std::optional<double> target_rate_hz;
  /// Event codes to epoch; empty selects every event.
  std::vector<int> event_codes;

  bool operator==(const PreprocessParams&) const = default;
};

/// Throws ParamError when `p` cannot be applied at `sampling_rate_hz`.
void validate(const PreprocessParams& p, double sampling_rate_hz);

/// Stimulus-locked epochs, stacked. `data` is [n_epochs][n_channels][n_times]
/// flattened; labels are per epoch.
struct EpochSet {
  std::vector<double> data;
  std::size_t n_epochs = 0;
  std::size_t n_channels = 0;
  std::size_t n_times = 0;
  std::vector<std::string> subject_ids;
  std::vector<std::string> session_ids;
  double sampling_rate_hz = 0.0;
  double tmin_s = 0.0;
  double tmax_s = 0.0;
  /// Time of sample 0 relative to the stimulus (≈ tmin_s, on the sample grid).
  double first_time_s = 0.0;
  std::vector<std::string> channel_names;
  /// Chronological session order inherited from the dataset manifest.
  std::vector<std::string> session_order;

  using EpochMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using MutableEpochMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  /// [n_channels x n_times] view of one epoch.
  EpochMap epoch(std::size_t e) const {
    return EpochMap(data.data() + e * n_channels * n_times, static_cast<Eigen::Index>(n_channels),
                    static_cast<Eigen::Index>(n_times));
  }
  MutableEpochMap epoch(std::size_t e) {
    return MutableEpochMap(data.data() + e * n_channels * n_times,
                           static_cast<Eigen::Index>(n_channels),
                           static_cast<Eigen::Index>(n_times));
  }
  const double* channel(std::size_t e, std::size_t c) const {
    return data.data() + (e * n_channels + c) * n_times;
  }
  double time_of(std::size_t t) const {
    return first_time_s + static_cast<double>(t) / sampling_rate_hz;
  }

  /// Keeps the listed epochs, in the given order.
  EpochSet select(const std::vector<std::size_t>& epochs) const;
};

/// Stacks epoch sets with identical geometry.
EpochSet concatenate(const std::vector<EpochSet>& parts);

/// Zero-phase 4th-order Butterworth band-pass applied to every channel.
RawRecording bandpass(const RawRecording& recording, double low_hz, double high_hz);

struct ExtractResult {
  EpochSet epochs;
  std::size_t skipped = 0;  ///< events whose window left the recording
};

/// One epoch per event (optionally filtered by code) whose window
/// [floor(onset + tmin*rate), floor(onset + tmax*rate)] fits the recording.
ExtractResult extract_epochs(const RawRecording& recording, double tmin_s, double tmax_s,
                             const std::vector<int>& event_codes = {});

/// Subtracts the per epoch-channel mean over the baseline window.
EpochSet baseline_correct(const EpochSet& epochs, std::pair<double, double> window_s);

/// Largest per-channel (max - min) within epoch `e`.
double peak_to_peak(const EpochSet& epochs, std::size_t e);

struct RejectResult {
  EpochSet epochs;
  std::size_t rejected = 0;
};

/// Drops epochs whose peak-to-peak amplitude exceeds `threshold_uv`.
RejectResult ptp_reject(const EpochSet& epochs, double threshold_uv);

/// Anti-alias (Butterworth order 4 at 0.45 * target, zero-phase) then linear
/// interpolation onto a uniform grid at the target rate.
EpochSet downsample(const EpochSet& epochs, double target_rate_hz);

struct PreprocessStats {
  std::size_t n_events = 0;
  std::size_t skipped = 0;
  std::size_t rejected = 0;
  std::size_t kept = 0;
};

/// bandpass -> extract -> baseline -> reject -> downsample on one recording.
/// The order is fixed.
RejectResult preprocess_recording(const RawRecording& recording, const PreprocessParams& params,
                                  PreprocessStats& stats);

}  // namespace neuroid
