#include "neuroid/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "neuroid/error.hpp"

namespace neuroid::dsp {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k + order - 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double prewarp(double freq_hz, double rate_hz) {
  return 2.0 * rate_hz * std::tan(kPi * freq_hz / rate_hz);
}

cplx bilinear(cplx s, double rate_hz) { return (2.0 * rate_hz + s) / (2.0 * rate_hz - s); }

// Groups digital poles into sections. `numerator` is applied to every biquad;
// a leftover real pole becomes a first-order section with `first_order_b1`.
SosFilter assemble(const std::vector<cplx>& z_poles, Biquad numerator, double first_order_b1) {
  std::vector<cplx> complex_upper;
  std::vector<double> reals;
  constexpr double tol = 1e-12;
  for (const auto& p : z_poles) {
    if (p.imag() > tol)
      complex_upper.push_back(p);
    else if (std::abs(p.imag()) <= tol)
      reals.push_back(p.real());
  }
  SosFilter f;
  f.order = static_cast<int>(z_poles.size());
  for (const auto& p : complex_upper) {
    Biquad q = numerator;
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    f.sections.push_back(q);
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t k = 0; k + 1 < reals.size(); k += 2) {
    Biquad q = numerator;
    q.a1 = -(reals[k] + reals[k + 1]);
    q.a2 = reals[k] * reals[k + 1];
    f.sections.push_back(q);
  }
  if (reals.size() % 2 == 1) {
    Biquad q;
    q.b0 = 1.0;
    q.b1 = first_order_b1;
    q.b2 = 0.0;
    q.a1 = -reals.back();
    q.a2 = 0.0;
    f.sections.push_back(q);
  }
  return f;
}

void normalise_gain(SosFilter& f, double freq_hz, double rate_hz) {
  const double mag = std::abs(f.response(freq_hz, rate_hz));
  const double per_section = std::pow(1.0 / mag, 1.0 / static_cast<double>(f.sections.size()));
  for (auto& q : f.sections) {
    q.b0 *= per_section;
    q.b1 *= per_section;
    q.b2 *= per_section;
  }
}

void check_rate(double rate_hz) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ParamError("sampling rate must be > 0");
}

void run_section(const Biquad& q, double z1, double z2, std::span<double> x) {
  for (double& v : x) {
    const double in = v;
    const double y = q.b0 * in + z1;
    z1 = q.b1 * in - q.a1 * y + z2;
    z2 = q.b2 * in - q.a2 * y;
    v = y;
  }
}

// Filters in place starting from steady state for a constant input equal to x[0].
void filter_steady(const SosFilter& f, std::span<double> x) {
  if (x.empty()) return;
  double level = x[0];
  for (const auto& q : f.sections) {
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = gain * level;
    const double z2 = q.b2 * level - q.a2 * y;
    const double z1 = q.b1 * level - q.a1 * y + z2;
    run_section(q, z1, z2, x);
    level = y;
  }
}

}  // namespace

cplx SosFilter::response(double freq_hz, double rate_hz) const {
  const cplx z = std::polar(1.0, 2.0 * kPi * freq_hz / rate_hz);
  const cplx zi = 1.0 / z;
  cplx h = 1.0;
  for (const auto& q : sections) {
    h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
  }
  return h;
}

SosFilter butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  check_rate(rate_hz);
  if (order < 1) throw ParamError("filter order must be >= 1");
  if (!(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0))
    throw ParamError("low-pass cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, Nyquist)");
  const double wc = prewarp(cutoff_hz, rate_hz);
  std::vector<cplx> z_poles;
  for (const auto& p : prototype_poles(order)) z_poles.push_back(bilinear(wc * p, rate_hz));
  Biquad num;
  num.b0 = 1.0;
  num.b1 = 2.0;
  num.b2 = 1.0;
  auto f = assemble(z_poles, num, 1.0);
  normalise_gain(f, 0.0, rate_hz);
  return f;
}

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz) {
  check_rate(rate_hz);
  if (order < 1) throw ParamError("filter order must be >= 1");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < rate_hz / 2.0))
    throw ParamError("band-pass edges must satisfy 0 < low < high < Nyquist (" +
                     std::to_string(rate_hz / 2.0) + " Hz)");
  const double w1 = prewarp(low_hz, rate_hz);
  const double w2 = prewarp(high_hz, rate_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cplx> z_poles;
  for (const auto& p : prototype_poles(order)) {
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    z_poles.push_back(bilinear(half + root, rate_hz));
    z_poles.push_back(bilinear(half - root, rate_hz));
  }
  Biquad num;
  num.b0 = 1.0;
  num.b1 = 0.0;
  num.b2 = -1.0;
  auto f = assemble(z_poles, num, 0.0);
  const double centre_hz = rate_hz / kPi * std::atan(w0 / (2.0 * rate_hz));
  normalise_gain(f, centre_hz, rate_hz);
  return f;
}

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& q : filter.sections) run_section(q, 0.0, 0.0, y);
  return y;
}

std::vector<double> sosfiltfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * static_cast<std::size_t>(filter.order), n - 1);

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t k = 0; k < pad; ++k) ext[k] = 2.0 * x[0] - x[pad - k];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t k = 0; k < pad; ++k) ext[pad + n + k] = 2.0 * x[n - 1] - x[n - 2 - k];

  filter_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());
  filter_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  return w;
}

RealDft::RealDft(std::size_t n) : n_(n) {
  if (n == 0) throw ParamError("DFT length must be positive");
  const auto bins = n_bins();
  cos_.resize(bins * n);
  sin_.resize(bins * n);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      const double angle =
          2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      cos_[k * n + t] = std::cos(angle);
      sin_[k * n + t] = std::sin(angle);
    }
  }
}

void RealDft::power(std::span<const double> x, std::span<double> out) const {
  const auto bins = n_bins();
  for (std::size_t k = 0; k < bins; ++k) {
    const double* c = &cos_[k * n_];
    const double* s = &sin_[k * n_];
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n_; ++t) {
      re += x[t] * c[t];
      im += x[t] * s[t];
    }
    out[k] = re * re + im * im;
  }
}

}  // namespace neuroid::dsp
