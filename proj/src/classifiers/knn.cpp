#include <algorithm>
#include <numeric>

#include "neuroid/classifiers.hpp"

namespace neuroid {

KnnModel::KnnModel(const Eigen::MatrixXd& X, Labels y, const KnnParams& p)
    : X_(X), y_(y.begin(), y.end()), k_(std::min<int>(p.k, static_cast<int>(X.rows()))) {}

std::vector<std::size_t> KnnModel::neighbours(const Eigen::RowVectorXd& x) const {
  const auto n = static_cast<std::size_t>(X_.rows());
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = (X_.row(static_cast<Eigen::Index>(i)) - x).squaredNorm();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto closer = [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  const auto k = static_cast<std::size_t>(k_);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  order.resize(k);
  return order;
}

std::vector<double> KnnModel::score(const Eigen::MatrixXd& X) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    int genuine = 0;
    for (auto i : neighbours(X.row(r))) genuine += y_[i];
    out.push_back(static_cast<double>(genuine) / k_);
  }
  return out;
}

}  // namespace neuroid
