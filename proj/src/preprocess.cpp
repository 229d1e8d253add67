#include "neuroid/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "neuroid/dsp.hpp"
#include "neuroid/error.hpp"

namespace neuroid {
namespace {

constexpr int kBandpassOrder = 4;
constexpr int kAntiAliasOrder = 4;
constexpr double kAntiAliasFraction = 0.45;
// Absorbs products like -0.2 * 100 = -20.000000000000004 before flooring.
constexpr double kGridEps = 1e-9;

std::int64_t offset_samples(double t_s, double rate_hz) {
  return static_cast<std::int64_t>(std::floor(t_s * rate_hz + kGridEps));
}

EpochSet empty_like(const EpochSet& e) {
  EpochSet out;
  out.n_channels = e.n_channels;
  out.n_times = e.n_times;
  out.sampling_rate_hz = e.sampling_rate_hz;
  out.tmin_s = e.tmin_s;
  out.tmax_s = e.tmax_s;
  out.first_time_s = e.first_time_s;
  out.channel_names = e.channel_names;
  out.session_order = e.session_order;
  return out;
}

}  // namespace

void validate(const PreprocessParams& p, double rate_hz) {
  if (!(p.band_low_hz > 0.0 && p.band_low_hz < p.band_high_hz && p.band_high_hz < rate_hz / 2.0))
    throw ParamError("band must satisfy 0 < low < high < sampling_rate/2");
  if (!(p.epoch_tmin_s < p.epoch_tmax_s)) throw ParamError("tmin < tmax violated");
  if (p.baseline_window_s) {
    const auto [b0, b1] = *p.baseline_window_s;
    if (!(b0 <= b1) || b0 < p.epoch_tmin_s - kGridEps || b1 > p.epoch_tmax_s + kGridEps)
      throw ParamError("baseline window must lie within [tmin, tmax]");
  }
  if (p.ptp_reject_uv && !(*p.ptp_reject_uv > 0.0))
    throw ParamError("rejection threshold must be > 0");
  if (p.target_rate_hz && !(*p.target_rate_hz > 0.0 && *p.target_rate_hz < rate_hz))
    throw ParamError("target rate must be positive and below the sampling rate");
}

EpochSet EpochSet::select(const std::vector<std::size_t>& epochs) const {
  EpochSet out = empty_like(*this);
  out.n_epochs = epochs.size();
  const auto stride = n_channels * n_times;
  out.data.resize(out.n_epochs * stride);
  out.subject_ids.reserve(epochs.size());
  out.session_ids.reserve(epochs.size());
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const auto e = epochs[k];
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(e * stride), stride,
                out.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
    out.subject_ids.push_back(subject_ids[e]);
    out.session_ids.push_back(session_ids[e]);
  }
  return out;
}

EpochSet concatenate(const std::vector<EpochSet>& parts) {
  if (parts.empty()) return {};
  EpochSet out = empty_like(parts.front());
  for (const auto& p : parts) {
    if (p.n_channels != out.n_channels || p.n_times != out.n_times ||
        p.sampling_rate_hz != out.sampling_rate_hz)
      throw ParamError("cannot concatenate epoch sets with different geometry");
    out.data.insert(out.data.end(), p.data.begin(), p.data.end());
    out.subject_ids.insert(out.subject_ids.end(), p.subject_ids.begin(), p.subject_ids.end());
    out.session_ids.insert(out.session_ids.end(), p.session_ids.begin(), p.session_ids.end());
    out.n_epochs += p.n_epochs;
  }
  return out;
}

RawRecording bandpass(const RawRecording& recording, double low_hz, double high_hz) {
  const auto filter =
      dsp::butterworth_bandpass(kBandpassOrder, low_hz, high_hz, recording.sampling_rate_hz);
  RawRecording out = recording;
  const auto n = static_cast<std::size_t>(recording.n_samples());
  for (Eigen::Index c = 0; c < recording.signal.rows(); ++c) {
    const double* row = recording.signal.data() + c * recording.signal.cols();
    const auto y = dsp::sosfiltfilt(filter, std::span<const double>(row, n));
    std::copy(y.begin(), y.end(), out.signal.data() + c * out.signal.cols());
  }
  return out;
}

ExtractResult extract_epochs(const RawRecording& recording, double tmin_s, double tmax_s,
                             const std::vector<int>& event_codes) {
  if (!(tmin_s < tmax_s)) throw ParamError("tmin < tmax violated");
  std::vector<EventMarker> events;
  for (const auto& ev : recording.events) {
    if (event_codes.empty() ||
        std::find(event_codes.begin(), event_codes.end(), ev.code) != event_codes.end())
      events.push_back(ev);
  }
  if (events.empty())
    throw EmptyError("no events to epoch in " + recording.subject_id + "/" + recording.session_id);

  const double rate = recording.sampling_rate_hz;
  const auto start_off = offset_samples(tmin_s, rate);
  const auto end_off = offset_samples(tmax_s, rate);
  const auto n_times = static_cast<std::size_t>(end_off - start_off + 1);
  const auto n_channels = static_cast<std::size_t>(recording.n_channels());
  const auto n_samples = recording.n_samples();

  ExtractResult result;
  auto& out = result.epochs;
  out.n_channels = n_channels;
  out.n_times = n_times;
  out.sampling_rate_hz = rate;
  out.tmin_s = tmin_s;
  out.tmax_s = tmax_s;
  out.first_time_s = static_cast<double>(start_off) / rate;

  for (const auto& ev : events) {
    const auto first = ev.sample_index + start_off;
    const auto last = ev.sample_index + end_off;
    if (first < 0 || last >= n_samples) {
      ++result.skipped;
      continue;
    }
    for (std::size_t c = 0; c < n_channels; ++c) {
      const double* row = recording.signal.data() + static_cast<std::int64_t>(c) * n_samples;
      out.data.insert(out.data.end(), row + first, row + last + 1);
    }
    out.subject_ids.push_back(recording.subject_id);
    out.session_ids.push_back(recording.session_id);
    ++out.n_epochs;
  }
  return result;
}

EpochSet baseline_correct(const EpochSet& epochs, std::pair<double, double> window_s) {
  const auto [w0, w1] = window_s;
  if (!(w0 <= w1) || w0 < epochs.tmin_s - kGridEps || w1 > epochs.tmax_s + kGridEps)
    throw ParamError("baseline window outside the epoch span");
  std::size_t first = epochs.n_times, last = 0;
  for (std::size_t t = 0; t < epochs.n_times; ++t) {
    const double time = epochs.time_of(t);
    if (time >= w0 - kGridEps && time <= w1 + kGridEps) {
      first = std::min(first, t);
      last = std::max(last, t);
    }
  }
  if (first > last) throw ParamError("baseline window contains no samples");

  EpochSet out = epochs;
  const double count = static_cast<double>(last - first + 1);
  for (std::size_t e = 0; e < out.n_epochs; ++e) {
    for (std::size_t c = 0; c < out.n_channels; ++c) {
      double* row = out.data.data() + (e * out.n_channels + c) * out.n_times;
      double mean = 0.0;
      for (std::size_t t = first; t <= last; ++t) mean += row[t];
      mean /= count;
      for (std::size_t t = 0; t < out.n_times; ++t) row[t] -= mean;
    }
  }
  return out;
}

double peak_to_peak(const EpochSet& epochs, std::size_t e) {
  double worst = 0.0;
  for (std::size_t c = 0; c < epochs.n_channels; ++c) {
    const double* row = epochs.channel(e, c);
    const auto [lo, hi] = std::minmax_element(row, row + epochs.n_times);
    worst = std::max(worst, *hi - *lo);
  }
  return worst;
}

RejectResult ptp_reject(const EpochSet& epochs, double threshold_uv) {
  if (!(threshold_uv > 0.0)) throw ParamError("rejection threshold must be > 0");
  std::vector<std::size_t> keep;
  for (std::size_t e = 0; e < epochs.n_epochs; ++e)
    if (peak_to_peak(epochs, e) <= threshold_uv) keep.push_back(e);
  if (keep.empty() && epochs.n_epochs > 0)
    throw EmptyError("peak-to-peak rejection at " + std::to_string(threshold_uv) +
                     " uV removed every epoch");
  RejectResult result;
  result.rejected = epochs.n_epochs - keep.size();
  result.epochs = epochs.select(keep);
  return result;
}

EpochSet downsample(const EpochSet& epochs, double target_rate_hz) {
  const double rate = epochs.sampling_rate_hz;
  if (!(target_rate_hz > 0.0) || target_rate_hz >= rate)
    throw ParamError("downsample target must be positive and below the source rate");
  const auto filter =
      dsp::butterworth_lowpass(kAntiAliasOrder, kAntiAliasFraction * target_rate_hz, rate);

  const auto n_new = static_cast<std::size_t>(
      std::llround((epochs.tmax_s - epochs.tmin_s) * target_rate_hz) + 1);
  EpochSet out = empty_like(epochs);
  out.n_epochs = epochs.n_epochs;
  out.n_times = n_new;
  out.sampling_rate_hz = target_rate_hz;
  out.subject_ids = epochs.subject_ids;
  out.session_ids = epochs.session_ids;
  out.data.resize(out.n_epochs * out.n_channels * n_new);

  const double last_time = epochs.time_of(epochs.n_times - 1);
  for (std::size_t e = 0; e < epochs.n_epochs; ++e) {
    for (std::size_t c = 0; c < epochs.n_channels; ++c) {
      const auto smooth =
          dsp::sosfiltfilt(filter, std::span<const double>(epochs.channel(e, c), epochs.n_times));
      double* dst = out.data.data() + (e * out.n_channels + c) * n_new;
      for (std::size_t k = 0; k < n_new; ++k) {
        const double t = std::min(epochs.first_time_s + static_cast<double>(k) / target_rate_hz,
                                  last_time);
        const double pos = (t - epochs.first_time_s) * rate;
        auto i0 = static_cast<std::size_t>(std::floor(pos));
        if (i0 >= epochs.n_times - 1) {
          dst[k] = smooth[epochs.n_times - 1];
          continue;
        }
        const double frac = pos - static_cast<double>(i0);
        dst[k] = smooth[i0] + frac * (smooth[i0 + 1] - smooth[i0]);
      }
    }
  }
  return out;
}

RejectResult preprocess_recording(const RawRecording& recording, const PreprocessParams& params,
                                  PreprocessStats& stats) {
  validate(params, recording.sampling_rate_hz);
  const auto filtered = bandpass(recording, params.band_low_hz, params.band_high_hz);
  auto extracted =
      extract_epochs(filtered, params.epoch_tmin_s, params.epoch_tmax_s, params.event_codes);
  stats.n_events += extracted.epochs.n_epochs + extracted.skipped;
  stats.skipped += extracted.skipped;

  EpochSet epochs = std::move(extracted.epochs);
  if (params.baseline_window_s) epochs = baseline_correct(epochs, *params.baseline_window_s);

  RejectResult result;
  if (params.ptp_reject_uv) {
    try {
      result = ptp_reject(epochs, *params.ptp_reject_uv);
    } catch (const EmptyError&) {
      // A single recording may lose everything; the dataset-level caller
      // decides whether that leaves anything to evaluate.
      result.rejected = epochs.n_epochs;
      result.epochs = epochs.select({});
    }
  } else {
    result.epochs = std::move(epochs);
  }
  stats.rejected += result.rejected;

  if (params.target_rate_hz) result.epochs = downsample(result.epochs, *params.target_rate_hz);
  stats.kept += result.epochs.n_epochs;
  return result;
}

}  // namespace neuroid
