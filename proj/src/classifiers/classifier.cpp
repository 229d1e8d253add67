#include <cmath>

#include "neuroid/classifiers.hpp"
#include "neuroid/error.hpp"

namespace neuroid {

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::KNN: return "KNN";
    case ClassifierKind::LDA: return "LDA";
    case ClassifierKind::LR: return "LR";
    case ClassifierKind::NB: return "NB";
    case ClassifierKind::RF: return "RF";
    case ClassifierKind::SVM: return "SVM";
  }
  return "?";
}

ClassifierSpec default_spec(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::KNN: return {KnnParams{}};
    case ClassifierKind::LDA: return {LdaParams{}};
    case ClassifierKind::LR: return {LrParams{}};
    case ClassifierKind::NB: return {NbParams{}};
    case ClassifierKind::RF: return {RfParams{}};
    case ClassifierKind::SVM: return {SvmParams{}};
  }
  throw ParamError("unknown classifier kind");
}

void validate(const ClassifierSpec& spec) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) {
          if (p.k < 1) throw ParamError("KNN: k must be >= 1");
        } else if constexpr (std::is_same_v<T, LrParams>) {
          if (!(p.lambda > 0.0)) throw ParamError("LogisticRegression: lambda must be > 0");
          if (p.max_iter < 1) throw ParamError("LogisticRegression: max_iter must be >= 1");
          if (!(p.tol > 0.0)) throw ParamError("LogisticRegression: tol must be > 0");
        } else if constexpr (std::is_same_v<T, NbParams>) {
          if (!(p.var_floor > 0.0)) throw ParamError("GaussianNB: var_floor must be > 0");
        } else if constexpr (std::is_same_v<T, RfParams>) {
          if (p.n_trees < 1) throw ParamError("RandomForest: n_trees must be >= 1");
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          if (!(p.C > 0.0)) throw ParamError("SVC: C must be > 0");
          if (p.gamma && !(*p.gamma > 0.0)) throw ParamError("SVC: gamma must be > 0");
          if (p.platt_folds < 2) throw ParamError("SVC: platt_folds must be >= 2");
          if (!(p.eps > 0.0)) throw ParamError("SVC: eps must be > 0");
        }
      },
      spec.params);
}

std::array<double, 2> balanced_weights(Labels y) {
  std::array<double, 2> count{0.0, 0.0};
  for (int v : y) count[static_cast<std::size_t>(v)] += 1.0;
  const double n = static_cast<double>(y.size());
  return {count[0] > 0 ? n / (2.0 * count[0]) : 0.0, count[1] > 0 ? n / (2.0 * count[1]) : 0.0};
}

std::vector<double> AuthModel::score(const Eigen::MatrixXd& X) const {
  if (!impl_) throw ValidationError("model", "not fitted");
  if (static_cast<std::size_t>(X.cols()) != n_features_)
    throw ValidationError("features", "model expects " + std::to_string(n_features_) +
                                          " features, got " + std::to_string(X.cols()));
  if (!X.allFinite()) throw ValidationError("features", "non-finite probe values");
  if (X.rows() == 0) return {};
  return impl_->score(X);
}

AuthModel fit(const ClassifierSpec& spec, const Eigen::MatrixXd& X, Labels y, std::uint64_t seed) {
  validate(spec);
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw ValidationError("labels", "row/label count mismatch");
  std::size_t n_gen = 0, n_imp = 0;
  for (int v : y) {
    if (v == 1)
      ++n_gen;
    else if (v == 0)
      ++n_imp;
    else
      throw ValidationError("labels", "labels must be 0 or 1");
  }
  if (n_gen == 0 || n_imp == 0) throw TrainingError("training data must contain both classes");
  if (!X.allFinite()) throw ValidationError("features", "non-finite training values");

  std::shared_ptr<const Authenticator> impl = std::visit(
      [&](const auto& p) -> std::shared_ptr<const Authenticator> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) return std::make_shared<KnnModel>(X, y, p);
        if constexpr (std::is_same_v<T, LdaParams>) return std::make_shared<LdaModel>(X, y);
        if constexpr (std::is_same_v<T, LrParams>) return std::make_shared<LogisticModel>(X, y, p);
        if constexpr (std::is_same_v<T, NbParams>) return std::make_shared<NaiveBayesModel>(X, y, p);
        if constexpr (std::is_same_v<T, RfParams>)
          return std::make_shared<RandomForestModel>(X, y, p, seed);
        if constexpr (std::is_same_v<T, SvmParams>) return std::make_shared<SvmModel>(X, y, p, seed);
      },
      spec.params);
  return AuthModel(spec.kind(), std::move(impl), static_cast<std::size_t>(X.cols()), n_gen, n_imp,
                   seed);
}

}  // namespace neuroid
