#include "neuroid/features.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "neuroid/dsp.hpp"
#include "neuroid/error.hpp"

namespace neuroid {
namespace {

struct WelchLayout {
  std::size_t segment = 0;
  std::size_t step = 0;
  int n_windows = 0;
};

WelchLayout welch_layout(std::size_t n, int n_windows, double overlap) {
  if (n_windows < 1) throw ParamError("Welch: n_windows must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ParamError("Welch: overlap must lie in [0, 1)");
  WelchLayout layout;
  layout.n_windows = n_windows;
  const double denom = 1.0 + (n_windows - 1) * (1.0 - overlap);
  layout.segment = static_cast<std::size_t>(std::floor(static_cast<double>(n) / denom + 1e-9));
  const auto noverlap =
      static_cast<std::size_t>(std::floor(static_cast<double>(layout.segment) * overlap));
  layout.step = layout.segment - noverlap;
  if (layout.segment < 4 || layout.step == 0 ||
      (n_windows - 1) * layout.step + layout.segment > n)
    throw ParamError("Welch: " + std::to_string(n) + " samples are too short for " +
                     std::to_string(n_windows) + " windows");
  return layout;
}

// Reusable state for many Welch estimates of the same length.
class WelchEstimator {
 public:
  WelchEstimator(std::size_t n, double rate_hz, int n_windows, double overlap)
      : layout_(welch_layout(n, n_windows, overlap)),
        rate_(rate_hz),
        window_(dsp::hann_periodic(layout_.segment)),
        dft_(layout_.segment),
        seg_(layout_.segment),
        bin_power_(dft_.n_bins()) {
    double sumsq = 0.0;
    for (double w : window_) sumsq += w * w;
    scale_ = 1.0 / (rate_ * sumsq);
  }

  std::vector<double> frequencies() const {
    std::vector<double> f(dft_.n_bins());
    for (std::size_t k = 0; k < f.size(); ++k)
      f[k] = static_cast<double>(k) * rate_ / static_cast<double>(layout_.segment);
    return f;
  }

  void estimate(const double* x, std::span<double> psd) {
    std::fill(psd.begin(), psd.end(), 0.0);
    const auto L = layout_.segment;
    for (int w = 0; w < layout_.n_windows; ++w) {
      const double* s = x + static_cast<std::size_t>(w) * layout_.step;
      double mean = 0.0;
      for (std::size_t t = 0; t < L; ++t) mean += s[t];
      mean /= static_cast<double>(L);
      for (std::size_t t = 0; t < L; ++t) seg_[t] = (s[t] - mean) * window_[t];
      dft_.power(seg_, bin_power_);
      for (std::size_t k = 0; k < psd.size(); ++k) psd[k] += bin_power_[k];
    }
    const auto bins = psd.size();
    for (std::size_t k = 0; k < bins; ++k) {
      double v = psd[k] * scale_ / layout_.n_windows;
      const bool nyquist = (L % 2 == 0) && k == bins - 1;
      if (k != 0 && !nyquist) v *= 2.0;
      psd[k] = v;
    }
  }

  std::size_t n_bins() const { return dft_.n_bins(); }

 private:
  WelchLayout layout_;
  double rate_;
  std::vector<double> window_;
  dsp::RealDft dft_;
  std::vector<double> seg_;
  std::vector<double> bin_power_;
  double scale_ = 0.0;
};

// Bin ranges per band, resolved once per frequency grid.
std::vector<std::pair<std::size_t, std::size_t>> band_bins(std::span<const double> freqs,
                                                           const std::vector<Band>& bands) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& b : bands) {
    std::size_t first = freqs.size(), last = 0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      if (freqs[k] >= b.low_hz && freqs[k] < b.high_hz) {
        first = std::min(first, k);
        last = k;
      }
    }
    if (first > last)
      throw ParamError("band '" + b.name + "' [" + std::to_string(b.low_hz) + ", " +
                       std::to_string(b.high_hz) + ") contains no frequency bins");
    ranges.emplace_back(first, last);
  }
  return ranges;
}

}  // namespace

std::vector<Band> default_bands() {
  return {{"low", 1.0, 10.0}, {"alpha", 10.0, 13.0}, {"beta", 13.0, 30.0}, {"gamma", 30.0, 50.0}};
}

void validate(const FeatureRecipe& r) {
  if (!r.use_ar && !r.use_psd) throw ParamError("feature recipe enables neither AR nor PSD");
  if (r.use_ar && r.ar_order < 1) throw ParamError("AR order must be >= 1");
  if (r.use_psd) {
    if (r.psd_n_windows < 1) throw ParamError("PSD window count must be >= 1");
    if (!(r.psd_overlap >= 0.0 && r.psd_overlap < 1.0))
      throw ParamError("PSD overlap must lie in [0, 1)");
    if (r.bands.empty()) throw ParamError("PSD needs at least one band");
    for (std::size_t k = 0; k < r.bands.size(); ++k) {
      const auto& b = r.bands[k];
      if (!(b.low_hz >= 0.0 && b.low_hz < b.high_hz))
        throw ParamError("band '" + b.name + "' must have 0 <= low < high");
      if (k > 0 && b.low_hz < r.bands[k - 1].high_hz)
        throw ParamError("bands must be ascending and non-overlapping");
    }
  }
}

std::vector<double> autocovariance(std::span<const double> x, int max_lag) {
  const auto n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centred(n);
  for (std::size_t t = 0; t < n; ++t) centred[t] = x[t] - mean;
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
      acc += centred[t] * centred[t - static_cast<std::size_t>(k)];
    r[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
  }
  return r;
}

std::vector<double> levinson_durbin(std::span<const double> r, int order) {
  if (order < 1 || r.size() < static_cast<std::size_t>(order) + 1)
    throw ParamError("Levinson-Durbin needs r_0..r_p");
  if (!(r[0] > 0.0)) throw DegenerateError("zero-variance series");
  std::vector<double> a(static_cast<std::size_t>(order), 0.0);
  std::vector<double> prev(a.size(), 0.0);
  double err = r[0];
  for (int m = 1; m <= order; ++m) {
    double acc = r[static_cast<std::size_t>(m)];
    for (int k = 1; k < m; ++k)
      acc -= prev[static_cast<std::size_t>(k - 1)] * r[static_cast<std::size_t>(m - k)];
    if (!(err > 0.0)) break;  // perfectly predictable; higher lags stay 0
    const double kappa = acc / err;
    for (int k = 1; k < m; ++k)
      a[static_cast<std::size_t>(k - 1)] =
          prev[static_cast<std::size_t>(k - 1)] - kappa * prev[static_cast<std::size_t>(m - k - 1)];
    a[static_cast<std::size_t>(m - 1)] = kappa;
    err *= (1.0 - kappa * kappa);
    prev = a;
  }
  return a;
}

std::vector<double> ar_coefficients(std::span<const double> x, int order) {
  if (order < 1) throw ParamError("AR order must be >= 1");
  if (x.size() <= static_cast<std::size_t>(order))
    throw ParamError("AR fit needs more than p samples");
  for (double v : x)
    if (!std::isfinite(v)) throw ParamError("AR fit on non-finite input");
  const auto r = autocovariance(x, order);
  if (!(r[0] > std::numeric_limits<double>::min())) throw DegenerateError("zero-variance series");
  return levinson_durbin(r, order);
}

Spectrum welch_psd(std::span<const double> x, double rate_hz, int n_windows, double overlap) {
  if (!(rate_hz > 0.0)) throw ParamError("Welch: sampling rate must be > 0");
  WelchEstimator est(x.size(), rate_hz, n_windows, overlap);
  Spectrum s;
  s.frequencies = est.frequencies();
  s.psd.resize(est.n_bins());
  est.estimate(x.data(), s.psd);
  return s;
}

std::vector<double> band_power(std::span<const double> frequencies, std::span<const double> psd,
                               const std::vector<Band>& bands) {
  if (frequencies.size() != psd.size()) throw ParamError("band_power: size mismatch");
  const auto ranges = band_bins(frequencies, bands);
  std::vector<double> out;
  out.reserve(bands.size());
  for (const auto& [first, last] : ranges) {
    double acc = 0.0;
    for (std::size_t k = first; k <= last; ++k) acc += psd[k];
    out.push_back(acc / static_cast<double>(last - first + 1));
  }
  return out;
}

std::size_t feature_span(const EpochSet& epochs, const FeatureRecipe& recipe) {
  if (recipe.full_epoch) return epochs.n_times;
  const auto one_second = static_cast<std::size_t>(std::llround(epochs.sampling_rate_hz));
  return std::min(epochs.n_times, one_second);
}

FeatureMatrix assemble(const EpochSet& epochs, const FeatureRecipe& recipe) {
  validate(recipe);
  const auto span = feature_span(epochs, recipe);
  const auto n_ar = recipe.use_ar ? static_cast<std::size_t>(recipe.ar_order) : 0;
  const auto n_psd = recipe.use_psd ? recipe.bands.size() : 0;
  const auto per_channel = n_ar + n_psd;

  FeatureMatrix fm;
  fm.recipe = recipe;
  fm.subject_ids = epochs.subject_ids;
  fm.session_ids = epochs.session_ids;
  fm.session_order = epochs.session_order;
  fm.values.resize(static_cast<Eigen::Index>(epochs.n_epochs),
                   static_cast<Eigen::Index>(epochs.n_channels * per_channel));
  for (std::size_t c = 0; c < epochs.n_channels; ++c) {
    for (std::size_t k = 1; k <= n_ar; ++k)
      fm.feature_names.push_back("ch" + std::to_string(c) + "_ar" + std::to_string(k));
    for (std::size_t b = 0; b < n_psd; ++b)
      fm.feature_names.push_back("ch" + std::to_string(c) + "_psd_" + recipe.bands[b].name);
  }

  std::unique_ptr<WelchEstimator> welch;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::vector<double> psd;
  if (recipe.use_psd) {
    welch = std::make_unique<WelchEstimator>(span, epochs.sampling_rate_hz, recipe.psd_n_windows,
                                             recipe.psd_overlap);
    ranges = band_bins(welch->frequencies(), recipe.bands);
    psd.resize(welch->n_bins());
  }

  for (std::size_t e = 0; e < epochs.n_epochs; ++e) {
    const auto row = static_cast<Eigen::Index>(e);
    for (std::size_t c = 0; c < epochs.n_channels; ++c) {
      const double* x = epochs.channel(e, c);
      auto col = static_cast<Eigen::Index>(c * per_channel);
      if (recipe.use_ar) {
        for (double a : ar_coefficients(std::span<const double>(x, span), recipe.ar_order))
          fm.values(row, col++) = a;
      }
      if (recipe.use_psd) {
        welch->estimate(x, psd);
        for (const auto& [first, last] : ranges) {
          double acc = 0.0;
          for (std::size_t k = first; k <= last; ++k) acc += psd[k];
          fm.values(row, col++) = acc / static_cast<double>(last - first + 1);
        }
      }
    }
  }
  if (!fm.values.allFinite()) throw DegenerateError("feature matrix contains NaN or Inf");
  return fm;
}

Standardizer standardize_fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw EmptyError("standardize_fit: no training rows");
  Standardizer s;
  s.mean = train.colwise().mean();
  s.scale.resize(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const double var = (train.col(j).array() - s.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    const double tiny = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s.mean(j)));
    s.scale(j) = sd > tiny ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& m) {
  if (m.cols() != s.mean.cols()) throw ValidationError("features", "column count mismatch");
  return (m.rowwise() - s.mean).array().rowwise() / s.scale.array();
}

FeatureMatrix standardize_apply(const Standardizer& s, const FeatureMatrix& m) {
  FeatureMatrix out = m;
  out.values = standardize_apply(s, m.values);
  return out;
}

}  // namespace neuroid
