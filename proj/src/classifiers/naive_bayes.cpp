#include <algorithm>
#include <cmath>
#include <numbers>

#include "neuroid/classifiers.hpp"

namespace neuroid {

NaiveBayesModel::NaiveBayesModel(const Eigen::MatrixXd& X, Labels y, const NbParams& p) {
  const auto d = X.cols();
  double count[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    mean_[c] = Eigen::RowVectorXd::Zero(d);
    var_[c] = Eigen::RowVectorXd::Zero(d);
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    mean_[c] += X.row(i);
    count[c] += 1.0;
  }
  for (int c = 0; c < 2; ++c) mean_[c] /= count[c];
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    var_[c].array() += (X.row(i) - mean_[c]).array().square();
  }
  const double n = count[0] + count[1];
  for (int c = 0; c < 2; ++c) {
    var_[c] /= count[c];
    var_[c] = var_[c].cwiseMax(p.var_floor);
    log_prior_[c] = std::log(count[c] / n);
  }
}

std::vector<double> NaiveBayesModel::score(const Eigen::MatrixXd& X) const {
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double ll[2];
    for (int c = 0; c < 2; ++c) {
      const auto diff = (X.row(i) - mean_[c]).array();
      ll[c] = log_prior_[c] -
              0.5 * ((2.0 * std::numbers::pi * var_[c].array()).log() + diff.square() / var_[c].array()).sum();
    }
    // Posterior of the genuine class, evaluated without overflow.
    const double z = ll[1] - ll[0];
    out[static_cast<std::size_t>(i)] =
        z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return out;
}

}  // namespace neuroid
