#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroid/classifiers.hpp"
#include "neuroid/rng.hpp"

namespace neuroid {
namespace {

struct Entry {
  double value;
  int row;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, Labels y, std::span<const double> weight)
      : X_(X), y_(y), weight_(weight), d_(static_cast<int>(X.cols())),
        mtry_(std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols())))))) {}

  RandomForestModel::Tree build(std::vector<int> rows, Rng& rng) {
    RandomForestModel::Tree tree;
    rows_ = std::move(rows);
    struct Pending {
      int node;
      std::size_t lo, hi;
    };
    tree.emplace_back();
    std::vector<Pending> stack{{0, 0, rows_.size()}};
    std::vector<int> features(static_cast<std::size_t>(d_));
    while (!stack.empty()) {
      const auto [node, lo, hi] = stack.back();
      stack.pop_back();
      double w0 = 0.0, w1 = 0.0;
      for (auto k = lo; k < hi; ++k) {
        const int r = rows_[k];
        (y_[static_cast<std::size_t>(r)] ? w1 : w0) += weight_[static_cast<std::size_t>(r)];
      }
      tree[static_cast<std::size_t>(node)].vote_genuine = w1 > w0;
      if (w0 == 0.0 || w1 == 0.0) continue;

      std::iota(features.begin(), features.end(), 0);
      Split best;
      int examined = 0;
      for (int left = d_; left > 0 && examined < mtry_; --left) {
        const auto j = uniform_index(rng, static_cast<std::uint64_t>(left));
        const int f = features[j];
        std::swap(features[j], features[static_cast<std::size_t>(left - 1)]);
        if (evaluate(f, lo, hi, w0, w1, best)) ++examined;
      }
      if (best.feature < 0) continue;

      const auto mid = partition(best, lo, hi);
      auto& n = tree[static_cast<std::size_t>(node)];
      n.feature = best.feature;
      n.threshold = best.threshold;
      const int l = static_cast<int>(tree.size());
      tree.emplace_back();
      tree.emplace_back();
      tree[static_cast<std::size_t>(node)].left = l;
      tree[static_cast<std::size_t>(node)].right = l + 1;
      stack.push_back({l + 1, mid, hi});
      stack.push_back({l, lo, mid});
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double proxy = -1.0;
  };

  // Scores every midpoint split on feature f. Returns false when the feature
  // is constant inside the node.
  bool evaluate(int f, std::size_t lo, std::size_t hi, double w0, double w1, Split& best) {
    const double* col = X_.data() + static_cast<Eigen::Index>(f) * X_.rows();
    buf_.clear();
    for (auto k = lo; k < hi; ++k) buf_.push_back({col[rows_[k]], rows_[k]});
    std::sort(buf_.begin(), buf_.end(), [](const Entry& a, const Entry& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
    if (buf_.front().value == buf_.back().value) return false;
    double l0 = 0.0, l1 = 0.0;
    const double total = w0 + w1;
    for (std::size_t k = 0; k + 1 < buf_.size(); ++k) {
      const int r = buf_[k].row;
      (y_[static_cast<std::size_t>(r)] ? l1 : l0) += weight_[static_cast<std::size_t>(r)];
      if (buf_[k].value == buf_[k + 1].value) continue;
      const double wl = l0 + l1;
      const double wr = total - wl;
      const double r0 = w0 - l0, r1 = w1 - l1;
      // Maximising this minimises the weighted Gini impurity of the children.
      const double proxy = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr;
      if (proxy > best.proxy) {
        best.proxy = proxy;
        best.feature = f;
        double t = 0.5 * (buf_[k].value + buf_[k + 1].value);
        if (t >= buf_[k + 1].value) t = buf_[k].value;
        best.threshold = t;
      }
    }
    return true;
  }

  std::size_t partition(const Split& s, std::size_t lo, std::size_t hi) {
    const double* col = X_.data() + static_cast<Eigen::Index>(s.feature) * X_.rows();
    auto it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(lo),
                                    rows_.begin() + static_cast<std::ptrdiff_t>(hi),
                                    [&](int r) { return col[r] <= s.threshold; });
    return static_cast<std::size_t>(it - rows_.begin());
  }

  const Eigen::MatrixXd& X_;
  Labels y_;
  std::span<const double> weight_;
  int d_;
  int mtry_;
  std::vector<int> rows_;
  std::vector<Entry> buf_;
};

}  // namespace

RandomForestModel::RandomForestModel(const Eigen::MatrixXd& X, Labels y, const RfParams& p,
                                     std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto cw = balanced_weights(y);
  std::vector<double> weight(n);
  std::vector<int> multiplicity(n);
  TreeBuilder builder(X, y, weight);
  trees_.reserve(static_cast<std::size_t>(p.n_trees));
  for (int t = 0; t < p.n_trees; ++t) {
    auto rng = make_rng(seed, {fnv1a("rf-tree"), static_cast<std::uint64_t>(t)});
    std::fill(multiplicity.begin(), multiplicity.end(), 0);
    for (std::size_t k = 0; k < n; ++k) ++multiplicity[uniform_index(rng, n)];
    std::vector<int> rows;
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = multiplicity[i] * cw[static_cast<std::size_t>(y[i])];
      if (multiplicity[i] > 0) rows.push_back(static_cast<int>(i));
    }
    trees_.push_back(builder.build(std::move(rows), rng));
  }
}

std::vector<double> RandomForestModel::score(const Eigen::MatrixXd& X) const {
  std::vector<double> out(static_cast<std::size_t>(X.rows()), 0.0);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    int votes = 0;
    for (const auto& tree : trees_) {
      int node = 0;
      while (tree[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = tree[static_cast<std::size_t>(node)];
        node = X(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      votes += tree[static_cast<std::size_t>(node)].vote_genuine ? 1 : 0;
    }
    out[static_cast<std::size_t>(r)] = static_cast<double>(votes) / static_cast<double>(trees_.size());
  }
  return out;
}

}  // namespace neuroid
