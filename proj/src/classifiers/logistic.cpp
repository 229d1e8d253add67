#include <cmath>

#include <Eigen/Cholesky>

#include "neuroid/classifiers.hpp"

namespace neuroid {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct Problem {
  const Eigen::MatrixXd& X;
  Eigen::VectorXd y;
  Eigen::VectorXd c;
  double lambda;

  double objective(const Eigen::VectorXd& w, double b) const {
    const Eigen::VectorXd z = (X * w).array() + b;
    double f = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) f += c(i) * (softplus(z(i)) - y(i) * z(i));
    return f + 0.5 * lambda * w.squaredNorm();
  }
};

}  // namespace

LogisticModel::LogisticModel(const Eigen::MatrixXd& X, Labels labels, const LrParams& p) {
  const auto n = X.rows();
  const auto d = X.cols();
  const auto cw = balanced_weights(labels);
  Problem prob{X, Eigen::VectorXd(n), Eigen::VectorXd(n), p.lambda};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int v = labels[static_cast<std::size_t>(i)];
    prob.y(i) = v;
    prob.c(i) = cw[static_cast<std::size_t>(v)];
  }

  w_ = Eigen::VectorXd::Zero(d);
  b_ = 0.0;
  double f = prob.objective(w_, b_);
  history_.push_back(f);

  // Augmented design [X | 1] so the intercept rides along in the Newton step.
  Eigen::MatrixXd A(n, d + 1);
  A.leftCols(d) = X;
  A.col(d).setOnes();

  Eigen::VectorXd g(d + 1);
  for (int iter = 0; iter < p.max_iter; ++iter) {
    const Eigen::VectorXd z = (X * w_).array() + b_;
    Eigen::VectorXd r(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sigmoid(z(i));
      r(i) = prob.c(i) * (s - prob.y(i));
      h(i) = prob.c(i) * s * (1.0 - s);
    }
    g = A.transpose() * r;
    g.head(d) += p.lambda * w_;
    grad_norm_ = g.norm();
    if (grad_norm_ <= p.tol) break;

    Eigen::MatrixXd H = A.transpose() * h.asDiagonal() * A;
    H.diagonal().head(d).array() += p.lambda;
    H(d, d) += 1e-12;
    const Eigen::VectorXd step = -H.ldlt().solve(g);
    const double slope = g.dot(step);
    if (!(slope < 0.0)) break;

    double t = 1.0;
    bool accepted = false;
    while (t >= 1e-12) {
      const Eigen::VectorXd w_new = w_ + t * step.head(d);
      const double b_new = b_ + t * step(d);
      const double f_new = prob.objective(w_new, b_new);
      if (f_new <= f + 1e-4 * t * slope) {
        w_ = w_new;
        b_ = b_new;
        f = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    history_.push_back(f);
  }
  // Report the gradient at the returned point.
  const Eigen::VectorXd z = (X * w_).array() + b_;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = prob.c(i) * (sigmoid(z(i)) - prob.y(i));
  g = A.transpose() * r;
  g.head(d) += p.lambda * w_;
  grad_norm_ = g.norm();
}

std::vector<double> LogisticModel::score(const Eigen::MatrixXd& X) const {
  const Eigen::VectorXd z = (X * w_).array() + b_;
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(z(i));
  return out;
}

}  // namespace neuroid
