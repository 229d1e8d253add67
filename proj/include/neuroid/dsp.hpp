#pragma once

#include <complex>
#include <span>
#include <vector>

namespace neuroid::dsp {

/// One biquad, transposed direct form II, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Cascade of second-order sections.
struct SosFilter {
  std::vector<Biquad> sections;
  int order = 0;  ///< number of poles

  /// Complex frequency response at `freq_hz` for sampling rate `rate_hz`.
  std::complex<double> response(double freq_hz, double rate_hz) const;
};

/// Digital Butterworth low-pass from an analog prototype of `order` poles via
/// the bilinear transform with pre-warping. Unit gain at DC.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double rate_hz);

/// Digital Butterworth band-pass; an `order`-pole low-pass prototype becomes a
/// 2*order-pole band-pass. Unit gain at the (warped) geometric centre.
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz);

/// Causal filtering with zero initial state.
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x);

/// Zero-phase filtering: odd reflection of 3x filter order samples at both
/// edges, steady-state initial conditions scaled by the first sample, then a
/// forward and a backward pass. Output length equals input length.
std::vector<double> sosfiltfilt(const SosFilter& filter, std::span<const double> x);

/// Periodic Hann window of length n.
std::vector<double> hann_periodic(std::size_t n);

/// Real-input DFT restricted to the non-negative bins 0..n/2, with a cached
/// twiddle table per length. Not thread-safe across instances sharing a table;
/// each instance owns its own.
class RealDft {
 public:
  explicit RealDft(std::size_t n);
  std::size_t size() const noexcept { return n_; }
  std::size_t n_bins() const noexcept { return n_ / 2 + 1; }

  /// |X_k|^2 for k = 0..n/2.
  void power(std::span<const double> x, std::span<double> out) const;

 private:
  std::size_t n_;
  std::vector<double> cos_;  // [bin][sample]
  std::vector<double> sin_;
};

}  // namespace neuroid::dsp
