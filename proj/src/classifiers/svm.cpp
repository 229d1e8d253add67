#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "neuroid/classifiers.hpp"
#include "neuroid/error.hpp"
#include "neuroid/rng.hpp"

namespace neuroid {
namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kMaxGramRows = 20000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double rbf_gamma(const Eigen::MatrixXd& X, const SvmParams& p) {
  if (p.gamma) return *p.gamma;
  const double mean = X.mean();
  const double var = (X.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
}

// Full Gram matrix of the training rows in single precision.
class Gram {
 public:
  Gram(const Eigen::MatrixXd& X, double gamma) : n_(static_cast<std::size_t>(X.rows())) {
    if (n_ > kMaxGramRows)
      throw TrainingError("SVC: " + std::to_string(n_) + " training rows exceed the in-memory kernel limit");
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    const Eigen::MatrixXd dot = X * X.transpose();
    k_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
        const double d2 = std::max(0.0, sq(a) + sq(b) - 2.0 * dot(a, b));
        k_[i * n_ + j] = static_cast<float>(std::exp(-gamma * d2));
      }
  }
  const float* row(std::size_t i) const { return k_.data() + i * n_; }

 private:
  std::size_t n_;
  std::vector<float> k_;
};

struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;
};

// SMO with second-order working-set selection (no shrinking) on the subset
// `idx` of the Gram matrix. Solves min 1/2 a'Qa - e'a s.t. y'a = 0,
// 0 <= a_i <= C_i.
DualSolution solve_dual(const Gram& gram, const std::vector<std::size_t>& idx,
                        const std::vector<int>& y, const std::vector<double>& C, double eps) {
  const std::size_t n = idx.size();
  std::vector<double> alpha(n, 0.0), G(n, -1.0), QD(n);
  for (std::size_t t = 0; t < n; ++t) QD[t] = gram.row(idx[t])[idx[t]];
  const auto Q = [&](std::size_t i, const float* ki, std::size_t j) {
    return static_cast<double>(y[i] * y[j]) * ki[idx[j]];
  };
  const auto upper = [&](std::size_t t) { return alpha[t] >= C[t]; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const std::size_t max_iter = std::max<std::size_t>(10000000, n > 0 ? 100 * n : 0);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double gmax = -kInf, gmax2 = -kInf, obj_min = kInf;
    std::ptrdiff_t i_sel = -1, j_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i_sel = static_cast<std::ptrdiff_t>(t);
      } else {
        if (!lower(t) && G[t] >= gmax) gmax = G[t], i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i_sel < 0) break;
    const auto i = static_cast<std::size_t>(i_sel);
    const float* ki = gram.row(idx[i]);
    for (std::size_t t = 0; t < n; ++t) {
      double grad_diff;
      if (y[t] == 1) {
        if (lower(t)) continue;
        grad_diff = gmax + G[t];
        gmax2 = std::max(gmax2, G[t]);
      } else {
        if (upper(t)) continue;
        grad_diff = gmax - G[t];
        gmax2 = std::max(gmax2, -G[t]);
      }
      if (grad_diff > 0.0) {
        double quad = QD[i] + QD[t] - 2.0 * y[i] * Q(i, ki, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= obj_min) obj_min = obj, j_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (gmax + gmax2 < eps || j_sel < 0) break;
    const auto j = static_cast<std::size_t>(j_sel);
    const float* kj = gram.row(idx[j]);

    const double ci = C[i], cj = C[j];
    const double old_i = alpha[i], old_j = alpha[j];
    const double qij = Q(i, ki, j);
    if (y[i] != y[j]) {
      double quad = QD[i] + QD[j] + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = diff;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = -diff;
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) alpha[i] = ci, alpha[j] = ci - diff;
      } else {
        if (alpha[j] > cj) alpha[j] = cj, alpha[i] = cj + diff;
      }
    } else {
      double quad = QD[i] + QD[j] - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) alpha[i] = ci, alpha[j] = sum - ci;
      } else {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = sum;
      }
      if (sum > cj) {
        if (alpha[j] > cj) alpha[j] = cj, alpha[i] = sum - cj;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, ki, i) * di + Q(t, kj, j) * dj;
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  DualSolution sol;
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.alpha = std::move(alpha);
  return sol;
}

struct SubModel {
  std::vector<std::size_t> idx;
  std::vector<int> y;
  DualSolution sol;
};

SubModel train_subset(const Gram& gram, const std::vector<std::size_t>& idx, Labels labels,
                      const SvmParams& p) {
  SubModel m;
  m.idx = idx;
  std::vector<int> sub_labels;
  for (auto r : idx) sub_labels.push_back(labels[r]);
  const auto cw = balanced_weights(sub_labels);
  std::vector<double> C;
  for (int v : sub_labels) {
    m.y.push_back(v == 1 ? 1 : -1);
    C.push_back(p.C * cw[static_cast<std::size_t>(v)]);
  }
  m.sol = solve_dual(gram, idx, m.y, C, p.eps);
  return m;
}

double decision_on_gram(const Gram& gram, const SubModel& m, std::size_t row) {
  const float* k = gram.row(row);
  double f = 0.0;
  for (std::size_t t = 0; t < m.idx.size(); ++t)
    if (m.sol.alpha[t] > 0.0) f += m.sol.alpha[t] * m.y[t] * k[m.idx[t]];
  return f - m.sol.rho;
}

double platt_loss(double f_ab, double target) {
  return f_ab >= 0 ? target * f_ab + std::log1p(std::exp(-f_ab))
                   : (target - 1.0) * f_ab + std::log1p(std::exp(f_ab));
}

// Newton fit of P(genuine | f) = 1 / (1 + exp(A f + B)) with regularised
// targets and backtracking (Lin, Lin and Weng's formulation).
std::pair<double, double> sigmoid_train(const std::vector<double>& dec, const std::vector<int>& y) {
  double prior1 = 0.0, prior0 = 0.0;
  for (int v : y) (v == 1 ? prior1 : prior0) += 1.0;
  const int max_iter = 100;
  const double min_step = 1e-10, sigma = 1e-12, eps = 1e-5;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
  const auto n = dec.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0)), fval = 0.0;
  for (std::size_t i = 0; i < n; ++i) fval += platt_loss(dec[i] * A + B, t[i]);
  for (int iter = 0; iter < max_iter; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fab = dec[i] * A + B;
      double p, q;
      if (fab >= 0) {
        p = std::exp(-fab) / (1.0 + std::exp(-fab));
        q = 1.0 / (1.0 + std::exp(-fab));
      } else {
        p = 1.0 / (1.0 + std::exp(fab));
        q = std::exp(fab) / (1.0 + std::exp(fab));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double nA = A + step * dA, nB = B + step * dB;
      double nf = 0.0;
      for (std::size_t i = 0; i < n; ++i) nf += platt_loss(dec[i] * nA + nB, t[i]);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < min_step) break;
  }
  return {A, B};
}

double sigmoid_predict(double f, double A, double B) {
  const double fab = f * A + B;
  return fab >= 0 ? std::exp(-fab) / (1.0 + std::exp(-fab)) : 1.0 / (1.0 + std::exp(fab));
}

}  // namespace

SvmModel::SvmModel(const Eigen::MatrixXd& X, Labels y, const SvmParams& p, std::uint64_t seed) {
  gamma_ = rbf_gamma(X, p);
  const auto n = static_cast<std::size_t>(X.rows());
  const Gram gram(X, gamma_);

  // Platt calibration from stratified internal folds sharing the Gram matrix.
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i) by_class[y[i]].push_back(i);
  auto rng = make_rng(seed, {fnv1a("svm-platt")});
  std::vector<int> fold_of(n);
  for (auto& members : by_class) {
    shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k)
      fold_of[members[k]] = static_cast<int>(k % static_cast<std::size_t>(p.platt_folds));
  }
  std::vector<double> dec(n, 0.0);
  std::vector<int> labels(y.begin(), y.end());
  for (int f = 0; f < p.platt_folds; ++f) {
    std::vector<std::size_t> train, test;
    bool has[2] = {false, false};
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == f) {
        test.push_back(i);
      } else {
        train.push_back(i);
        has[y[i]] = true;
      }
    }
    if (test.empty()) continue;
    if (!has[0] || !has[1]) {
      for (auto i : test) dec[i] = has[1] ? 1.0 : -1.0;
      continue;
    }
    const auto sub = train_subset(gram, train, y, p);
    for (auto i : test) dec[i] = decision_on_gram(gram, sub, i);
  }
  std::tie(platt_a_, platt_b_) = sigmoid_train(dec, labels);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto full = train_subset(gram, all, y, p);
  rho_ = full.sol.rho;
  std::vector<Eigen::Index> support;
  std::vector<double> coef;
  for (std::size_t t = 0; t < n; ++t) {
    if (full.sol.alpha[t] > 0.0) {
      support.push_back(static_cast<Eigen::Index>(t));
      coef.push_back(full.sol.alpha[t] * full.y[t]);
    }
  }
  sv_.resize(static_cast<Eigen::Index>(support.size()), X.cols());
  coef_.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    sv_.row(static_cast<Eigen::Index>(s)) = X.row(support[s]);
    coef_(static_cast<Eigen::Index>(s)) = coef[s];
  }
}

std::vector<double> SvmModel::decision(const Eigen::MatrixXd& X) const {
  std::vector<double> out(static_cast<std::size_t>(X.rows()), -rho_);
  if (sv_.rows() == 0) return out;
  const Eigen::VectorXd sv_sq = sv_.rowwise().squaredNorm();
  const Eigen::MatrixXd dot = X * sv_.transpose();
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const double xsq = X.row(r).squaredNorm();
    double f = 0.0;
    for (Eigen::Index s = 0; s < sv_.rows(); ++s) {
      const double d2 = std::max(0.0, xsq + sv_sq(s) - 2.0 * dot(r, s));
      f += coef_(s) * std::exp(-gamma_ * d2);
    }
    out[static_cast<std::size_t>(r)] += f;
  }
  return out;
}

std::vector<double> SvmModel::score(const Eigen::MatrixXd& X) const {
  auto f = decision(X);
  for (auto& v : f) v = sigmoid_predict(v, platt_a_, platt_b_);
  return f;
}

}  // namespace neuroid
