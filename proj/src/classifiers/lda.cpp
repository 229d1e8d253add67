#include <cmath>

#include <Eigen/SVD>

#include "neuroid/classifiers.hpp"

namespace neuroid {
namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = (s.size() ? s(0) : 0.0) * static_cast<double>(std::max(m.rows(), m.cols())) *
                     Eigen::NumTraits<double>::epsilon();
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > tol ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

LdaModel::LdaModel(const Eigen::MatrixXd& X, Labels y) {
  const auto d = X.cols();
  Eigen::RowVectorXd mu[2] = {Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d)};
  double count[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    mu[y[static_cast<std::size_t>(i)]] += X.row(i);
    count[y[static_cast<std::size_t>(i)]] += 1.0;
  }
  mu[0] /= count[0];
  mu[1] /= count[1];

  Eigen::MatrixXd centred(X.rows(), d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) centred.row(i) = X.row(i) - mu[y[static_cast<std::size_t>(i)]];
  const double n = static_cast<double>(X.rows());
  const double dof = n > 2.0 ? n - 2.0 : n;
  const Eigen::MatrixXd cov = centred.transpose() * centred / dof;

  w_ = pseudo_inverse(cov) * (mu[1] - mu[0]).transpose();
  b_ = -0.5 * (mu[1] + mu[0]).dot(w_.transpose()) + std::log(count[1] / count[0]);
}

std::vector<double> LdaModel::score(const Eigen::MatrixXd& X) const {
  const Eigen::VectorXd z = X * w_;
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(z(i) + b_);
  return out;
}

}  // namespace neuroid
