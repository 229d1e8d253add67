#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "neuroid/preprocess.hpp"

namespace neuroid {

struct TwinConfig {
  std::vector<int> conv_filters{16, 32, 64, 128, 32};
  int kernel_time = 7;
  int embedding_dim = 32;
  double margin = 1.0;
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  bool verbose = false;
  int workers = 1;

  bool operator==(const TwinConfig&) const = default;
};

inline constexpr int kTwinStages = 5;

void validate(const TwinConfig& config);

/// Smallest admissible epoch length: 2^5 * kernel_time.
int min_time_samples(const TwinConfig& config);

/// Time length after each conv + pool stage: L_i = floor((L_{i-1} - k + 1) / 2).
std::vector<int> stage_lengths(int n_times, int kernel_time, int n_stages = kTwinStages);

/// Five [conv over time, ReLU, average-pool 2] stages, global average over
/// time, dense projection, L2 normalisation. All parameters live in one flat
/// vector so optimisers and gradient checks can treat them uniformly.
class EmbeddingModel {
 public:
  /// Throws ParamError when the geometry cannot survive five stages.
  static EmbeddingModel build(const TwinConfig& config, int n_channels, int n_times);

  int n_channels() const { return n_channels_; }
  int n_times() const { return n_times_; }
  int embedding_dim() const { return config_.embedding_dim; }
  const TwinConfig& config() const { return config_; }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  /// Multiplies every input sample before the first layer; set from the
  /// training data by `train`.
  double input_scale() const { return input_scale_; }
  void set_input_scale(double s) { input_scale_ = s; }

  /// Mean batch loss per training epoch.
  const std::vector<double>& loss_log() const { return loss_log_; }
  std::vector<double>& loss_log() { return loss_log_; }

  /// Embedding of one epoch given as [n_channels][n_times] row-major data.
  Eigen::VectorXd embed_one(const double* epoch) const;

  /// One unit-norm row per epoch. Throws ValidationError on a geometry mismatch.
  Eigen::MatrixXd embed(const EpochSet& epochs) const;
  Eigen::MatrixXd embed(const EpochSet& epochs, std::span<const std::size_t> rows) const;

  /// Distances to the non-smooth points of the forward pass for one epoch:
  /// the smallest |pre-activation| over every ReLU input, and the norm of the
  /// dense output before L2 normalisation. Used to pick well-conditioned
  /// points for finite-difference checks.
  struct Smoothness {
    double min_abs_preactivation = 0.0;
    double raw_norm = 0.0;
  };
  Smoothness smoothness(const double* epoch) const;

  /// Batch-hard triplet loss of the batch and its gradient with respect to
  /// every parameter (same layout as `parameters()`).
  double loss_and_gradient(std::span<const double* const> inputs, std::span<const int> labels,
                           std::vector<double>& gradient) const;

 private:
  struct Cache;
  struct Layout {
    std::size_t w, b;  // offsets
    int in, out;
  };

  Eigen::VectorXd forward(const double* epoch, Cache* cache) const;
  void backward(const Cache& cache, const Eigen::VectorXd& d_embedding,
                std::vector<double>& gradient) const;
  void check_geometry(const EpochSet& epochs) const;

  TwinConfig config_;
  int n_channels_ = 0;
  int n_times_ = 0;
  double input_scale_ = 1.0;
  std::vector<Layout> conv_;
  Layout dense_{};
  std::vector<double> params_;
  std::vector<double> loss_log_;
};

/// Batch-hard selections per anchor: hardest positive (largest squared
/// distance, same label, not itself) and hardest negative (smallest squared
/// distance, other label); -1 when absent. Ties resolve to the lower index.
struct Mining {
  std::vector<int> positive;
  std::vector<int> negative;
};
Mining batch_hard(const Eigen::MatrixXd& embeddings, std::span<const int> labels);

/// Mean over anchors of max(0, |a-p|^2 - |a-n|^2 + margin), with gradients.
struct TripletResult {
  double loss = 0.0;
  Eigen::MatrixXd d_anchor, d_positive, d_negative;
};
TripletResult triplet_loss(const Eigen::MatrixXd& anchor, const Eigen::MatrixXd& positive,
                           const Eigen::MatrixXd& negative, double margin);

/// Batch-hard loss on embedding rows and its gradient with respect to them.
/// Anchors lacking a positive or a negative are left out of the mean.
double batch_hard_loss(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                       double margin, Eigen::MatrixXd* gradient);

/// Adam on mini-batches of shuffled epochs. Labels come from subject ids.
/// Throws TrainingError with fewer than two subjects.
EmbeddingModel train(EmbeddingModel model, const EpochSet& epochs, const TwinConfig& config);

/// L2-normalised mean embedding. Throws ParamError when empty.
Eigen::VectorXd enrollment_template(const Eigen::MatrixXd& embeddings);

/// Cosine similarity of each probe row with `tmpl`.
std::vector<double> cosine_scores(const Eigen::VectorXd& tmpl, const Eigen::MatrixXd& probes);

std::vector<double> enroll_and_score(const EmbeddingModel& model, const EpochSet& enrollment,
                                     const EpochSet& probes);

}  // namespace neuroid
