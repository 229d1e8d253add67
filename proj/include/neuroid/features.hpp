#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "neuroid/preprocess.hpp"

namespace neuroid {

struct Band {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;

  bool operator==(const Band&) const = default;
};

/// low 1-10, alpha 10-13, beta 13-30, gamma 30-50 Hz.
std::vector<Band> default_bands();

struct FeatureRecipe {
  bool use_ar = true;
  int ar_order = 1;
  bool use_psd = true;
  int psd_n_windows = 4;
  double psd_overlap = 0.5;
  std::vector<Band> bands = default_bands();
  /// Compute features over the whole epoch instead of its first second.
  bool full_epoch = false;

  bool operator==(const FeatureRecipe&) const = default;
};

void validate(const FeatureRecipe& recipe);

struct FeatureMatrix {
  Eigen::MatrixXd values;  ///< [n_epochs x n_features]
  std::vector<std::string> feature_names;
  std::vector<std::string> subject_ids;
  std::vector<std::string> session_ids;
  std::vector<std::string> session_order;
  FeatureRecipe recipe;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
};

/// Yule-Walker AR(p) fit via Levinson-Durbin on the biased (divide-by-N)
/// autocovariance of the mean-removed series. Returns a_1..a_p for
/// x_t = sum_k a_k x_{t-k} + e_t. Throws DegenerateError on zero variance.
std::vector<double> ar_coefficients(std::span<const double> x, int order);

/// Biased autocovariance r_0..r_max_lag of the mean-removed series.
std::vector<double> autocovariance(std::span<const double> x, int max_lag);

/// Levinson-Durbin recursion for the Toeplitz system built from `r`.
std::vector<double> levinson_durbin(std::span<const double> r, int order);

struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> psd;
};

/// Welch estimate: `n_windows` equal Hann-windowed segments with the given
/// fractional overlap, each mean-detrended, one-sided density scaling
/// (power per Hz). Segment length L = floor(N / (1 + (n_windows - 1)(1 - overlap))),
/// i.e. floor(2N/5) for four windows at 50%.
Spectrum welch_psd(std::span<const double> x, double rate_hz, int n_windows = 4,
                   double overlap = 0.5);

/// Mean PSD over bins with frequency in [low, high) for each band.
std::vector<double> band_power(std::span<const double> frequencies, std::span<const double> psd,
                               const std::vector<Band>& bands);

/// Number of leading samples used for classical features (one second unless
/// the recipe asks for the full epoch).
std::size_t feature_span(const EpochSet& epochs, const FeatureRecipe& recipe);

/// Per epoch, per channel: AR coefficients then band powers, channel-major.
FeatureMatrix assemble(const EpochSet& epochs, const FeatureRecipe& recipe);

/// z-scaling with statistics learned from training rows only.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
};

Standardizer standardize_fit(const Eigen::MatrixXd& train);
Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& m);

inline Standardizer standardize_fit(const FeatureMatrix& train) {
  return standardize_fit(train.values);
}
FeatureMatrix standardize_apply(const Standardizer& s, const FeatureMatrix& m);

}  // namespace neuroid
