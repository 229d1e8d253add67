#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace neuroid {

enum class ClassifierKind { KNN, LDA, LR, NB, RF, SVM };

std::string to_string(ClassifierKind kind);

struct KnnParams {
  int k = 5;
  bool operator==(const KnnParams&) const = default;
};

struct LdaParams {
  bool operator==(const LdaParams&) const = default;
};

struct LrParams {
  /// L2 strength on the weights (intercept unpenalised).
  double lambda = 1.0;
  int max_iter = 100;
  double tol = 1e-8;
  bool operator==(const LrParams&) const = default;
};

struct NbParams {
  double var_floor = 1e-9;
  bool operator==(const NbParams&) const = default;
};

struct RfParams {
  int n_trees = 100;
  bool operator==(const RfParams&) const = default;
};

struct SvmParams {
  double C = 1.0;
  /// Absent: 1 / (n_features * var(X)).
  std::optional<double> gamma;
  int platt_folds = 3;
  double eps = 1e-3;
  bool operator==(const SvmParams&) const = default;
};

using ClassifierParams =
    std::variant<KnnParams, LdaParams, LrParams, NbParams, RfParams, SvmParams>;

struct ClassifierSpec {
  ClassifierParams params;

  ClassifierKind kind() const { return static_cast<ClassifierKind>(params.index()); }
  bool operator==(const ClassifierSpec&) const = default;
};

ClassifierSpec default_spec(ClassifierKind kind);
void validate(const ClassifierSpec& spec);

/// A fitted per-user model. Scores lie in [0, 1]; higher means genuine.
class Authenticator {
 public:
  virtual ~Authenticator() = default;
  virtual std::vector<double> score(const Eigen::MatrixXd& X) const = 0;
};

/// Labels: 1 = genuine, 0 = impostor.
using Labels = std::span<const int>;

class KnnModel final : public Authenticator {
 public:
  KnnModel(const Eigen::MatrixXd& X, Labels y, const KnnParams& p);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;
  /// Training-row indices of the k nearest neighbours of `x`, closest first,
  /// ties broken by lower index.
  std::vector<std::size_t> neighbours(const Eigen::RowVectorXd& x) const;
  int k() const { return k_; }

 private:
  Eigen::MatrixXd X_;
  std::vector<int> y_;
  int k_;
};

class LdaModel final : public Authenticator {
 public:
  LdaModel(const Eigen::MatrixXd& X, Labels y);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;
  /// Discriminant direction Sigma^+ (mu_1 - mu_0).
  const Eigen::VectorXd& direction() const { return w_; }
  double bias() const { return b_; }

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

class LogisticModel final : public Authenticator {
 public:
  LogisticModel(const Eigen::MatrixXd& X, Labels y, const LrParams& p);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;
  const Eigen::VectorXd& weights() const { return w_; }
  double intercept() const { return b_; }
  /// Penalised objective (to be minimised) after each accepted step,
  /// starting with the initial point.
  const std::vector<double>& objective_history() const { return history_; }
  double final_gradient_norm() const { return grad_norm_; }

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
  std::vector<double> history_;
  double grad_norm_ = 0.0;
};

class NaiveBayesModel final : public Authenticator {
 public:
  NaiveBayesModel(const Eigen::MatrixXd& X, Labels y, const NbParams& p);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;

 private:
  Eigen::RowVectorXd mean_[2];
  Eigen::RowVectorXd var_[2];
  double log_prior_[2] = {0.0, 0.0};
};

class RandomForestModel final : public Authenticator {
 public:
  RandomForestModel(const Eigen::MatrixXd& X, Labels y, const RfParams& p, std::uint64_t seed);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;
  int n_trees() const { return static_cast<int>(trees_.size()); }

  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool vote_genuine = false;
  };
  using Tree = std::vector<Node>;
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
};

class SvmModel final : public Authenticator {
 public:
  SvmModel(const Eigen::MatrixXd& X, Labels y, const SvmParams& p, std::uint64_t seed);
  std::vector<double> score(const Eigen::MatrixXd& X) const override;
  /// Signed distance-like decision value sum_i alpha_i y_i K(x_i, x) - rho.
  std::vector<double> decision(const Eigen::MatrixXd& X) const;
  double gamma() const { return gamma_; }
  double platt_a() const { return platt_a_; }
  double platt_b() const { return platt_b_; }
  std::size_t n_support() const { return static_cast<std::size_t>(sv_.rows()); }

 private:
  Eigen::MatrixXd sv_;
  Eigen::VectorXd coef_;  // alpha_i * y_i
  double rho_ = 0.0;
  double gamma_ = 1.0;
  double platt_a_ = 0.0;
  double platt_b_ = 0.0;
};

/// Fitted model plus training metadata.
class AuthModel {
 public:
  AuthModel() = default;
  AuthModel(ClassifierKind kind, std::shared_ptr<const Authenticator> impl, std::size_t n_features,
            std::size_t n_genuine, std::size_t n_impostor, std::uint64_t seed)
      : kind_(kind),
        impl_(std::move(impl)),
        n_features_(n_features),
        n_genuine_(n_genuine),
        n_impostor_(n_impostor),
        seed_(seed) {}

  /// Throws ValidationError on feature-dimension mismatch.
  std::vector<double> score(const Eigen::MatrixXd& X) const;

  ClassifierKind kind() const { return kind_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_genuine() const { return n_genuine_; }
  std::size_t n_impostor() const { return n_impostor_; }
  std::uint64_t seed() const { return seed_; }

  template <class T>
  const T* as() const {
    return dynamic_cast<const T*>(impl_.get());
  }

 private:
  ClassifierKind kind_ = ClassifierKind::KNN;
  std::shared_ptr<const Authenticator> impl_;
  std::size_t n_features_ = 0;
  std::size_t n_genuine_ = 0;
  std::size_t n_impostor_ = 0;
  std::uint64_t seed_ = 0;
};

/// Throws TrainingError unless both classes are present, ValidationError on
/// non-finite features or bad labels.
AuthModel fit(const ClassifierSpec& spec, const Eigen::MatrixXd& X, Labels y, std::uint64_t seed);

/// n / (2 * n_class) per class, indexed by label.
std::array<double, 2> balanced_weights(Labels y);

}  // namespace neuroid
