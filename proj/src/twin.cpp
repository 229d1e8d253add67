#include "neuroid/twin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "neuroid/error.hpp"
#include "neuroid/rng.hpp"

namespace neuroid {
namespace {

constexpr double kNormEps = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

using Matrix = Eigen::MatrixXd;
using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

// Column t holds the receptive field of output t: row i*k + j is x(i, t + j).
Matrix im2col(const Matrix& x, int k) {
  const auto in = x.rows();
  const auto out_len = x.cols() - k + 1;
  Matrix col(in * k, out_len);
  for (Eigen::Index t = 0; t < out_len; ++t)
    for (Eigen::Index i = 0; i < in; ++i)
      for (int j = 0; j < k; ++j) col(i * k + j, t) = x(i, t + j);
  return col;
}

void col2im_add(const Matrix& col, int k, Matrix& dx) {
  const auto in = dx.rows();
  for (Eigen::Index t = 0; t < col.cols(); ++t)
    for (Eigen::Index i = 0; i < in; ++i)
      for (int j = 0; j < k; ++j) dx(i, t + j) += col(i * k + j, t);
}

}  // namespace

struct EmbeddingModel::Cache {
  std::vector<Matrix> inputs;  // stage inputs (in x L)
  std::vector<Matrix> pre;     // conv outputs before ReLU (out x L')
  Matrix last;                 // pooled output of the final stage
  Eigen::VectorXd pooled;      // global average
  Eigen::VectorXd raw;         // dense output before normalisation
  Eigen::VectorXd embedding;
};

void validate(const TwinConfig& c) {
  if (static_cast<int>(c.conv_filters.size()) != kTwinStages)
    throw ParamError("TwinNeuralNetwork: conv_filters must list exactly 5 stages");
  for (int f : c.conv_filters)
    if (f < 1) throw ParamError("TwinNeuralNetwork: conv filter counts must be >= 1");
  if (c.kernel_time < 1) throw ParamError("TwinNeuralNetwork: kernel_time must be >= 1");
  if (c.embedding_dim < 2) throw ParamError("TwinNeuralNetwork: embedding_dim must be >= 2");
  if (!(c.margin > 0.0)) throw ParamError("TwinNeuralNetwork: margin must be > 0");
  if (c.epochs < 0) throw ParamError("TwinNeuralNetwork: EPOCHS must be >= 0");
  if (c.batch_size < 3) throw ParamError("TwinNeuralNetwork: batch_size must be >= 3");
  if (!(c.learning_rate > 0.0)) throw ParamError("TwinNeuralNetwork: learning_rate must be > 0");
  if (c.workers < 1) throw ParamError("TwinNeuralNetwork: workers must be >= 1");
}

int min_time_samples(const TwinConfig& c) { return (1 << kTwinStages) * c.kernel_time; }

std::vector<int> stage_lengths(int n_times, int kernel_time, int n_stages) {
  std::vector<int> out;
  int len = n_times;
  for (int s = 0; s < n_stages; ++s) {
    len = std::max(0, (len - kernel_time + 1) / 2);
    out.push_back(len);
  }
  return out;
}

EmbeddingModel EmbeddingModel::build(const TwinConfig& config, int n_channels, int n_times) {
  validate(config);
  if (n_channels < 1) throw ParamError("TwinNeuralNetwork: need at least one channel");
  const int minimum = min_time_samples(config);
  if (n_times < minimum)
    throw ParamError("TwinNeuralNetwork: epochs have " + std::to_string(n_times) +
                     " samples; at least " + std::to_string(minimum) + " are required");
  EmbeddingModel m;
  m.config_ = config;
  m.n_channels_ = n_channels;
  m.n_times_ = n_times;

  std::size_t offset = 0;
  int in = n_channels;
  for (int out : config.conv_filters) {
    Layout l{offset, offset + static_cast<std::size_t>(out) * in * config.kernel_time, in, out};
    offset = l.b + static_cast<std::size_t>(out);
    m.conv_.push_back(l);
    in = out;
  }
  m.dense_ = {offset, offset + static_cast<std::size_t>(config.embedding_dim) * in, in,
              config.embedding_dim};
  offset = m.dense_.b + static_cast<std::size_t>(config.embedding_dim);
  m.params_.assign(offset, 0.0);

  // He-uniform weights, zero biases.
  auto rng = make_rng(config.seed, {fnv1a("twin-init")});
  const auto fill = [&](const Layout& l, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (std::size_t p = l.w; p < l.b; ++p) m.params_[p] = limit * (2.0 * uniform01(rng) - 1.0);
  };
  for (const auto& l : m.conv_) fill(l, l.in * config.kernel_time);
  fill(m.dense_, m.dense_.in);
  return m;
}

Eigen::VectorXd EmbeddingModel::forward(const double* epoch, Cache* cache) const {
  const int k = config_.kernel_time;
  Matrix x = ConstMap(epoch, n_times_, n_channels_).transpose() * input_scale_;
  for (const auto& l : conv_) {
    const ConstMap W(params_.data() + l.w, l.out, l.in * k);
    const Eigen::Map<const Eigen::VectorXd> b(params_.data() + l.b, l.out);
    Matrix z = W * im2col(x, k);
    z.colwise() += b;
    const Eigen::Index pooled_len = z.cols() / 2;
    Matrix p(l.out, pooled_len);
    for (Eigen::Index t = 0; t < pooled_len; ++t)
      p.col(t) = 0.5 * (z.col(2 * t).cwiseMax(0.0) + z.col(2 * t + 1).cwiseMax(0.0));
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(std::move(z));
    }
    x = std::move(p);
  }
  const Eigen::VectorXd g = x.rowwise().mean();
  const ConstMap Wd(params_.data() + dense_.w, dense_.out, dense_.in);
  const Eigen::Map<const Eigen::VectorXd> bd(params_.data() + dense_.b, dense_.out);
  Eigen::VectorXd r = Wd * g + bd;
  const double norm = std::max(r.norm(), kNormEps);
  Eigen::VectorXd e = r / norm;
  if (cache) {
    cache->last = std::move(x);
    cache->pooled = g;
    cache->raw = std::move(r);
    cache->embedding = e;
  }
  return e;
}

void EmbeddingModel::backward(const Cache& c, const Eigen::VectorXd& de,
                              std::vector<double>& grad) const {
  const int k = config_.kernel_time;
  const double norm = std::max(c.raw.norm(), kNormEps);
  const Eigen::VectorXd dr = (de - c.embedding * c.embedding.dot(de)) / norm;

  MutMap dWd(grad.data() + dense_.w, dense_.out, dense_.in);
  Eigen::Map<Eigen::VectorXd> dbd(grad.data() + dense_.b, dense_.out);
  dWd.noalias() += dr * c.pooled.transpose();
  dbd += dr;
  const ConstMap Wd(params_.data() + dense_.w, dense_.out, dense_.in);
  const Eigen::VectorXd dg = Wd.transpose() * dr;

  Matrix dp = dg.replicate(1, c.last.cols()) / static_cast<double>(c.last.cols());
  for (int s = kTwinStages - 1; s >= 0; --s) {
    const auto& l = conv_[static_cast<std::size_t>(s)];
    const Matrix& z = c.pre[static_cast<std::size_t>(s)];
    Matrix dz = Matrix::Zero(z.rows(), z.cols());
    for (Eigen::Index t = 0; t < dp.cols(); ++t) {
      for (Eigen::Index o = 0; o < z.rows(); ++o) {
        const double v = 0.5 * dp(o, t);
        if (z(o, 2 * t) > 0.0) dz(o, 2 * t) = v;
        if (z(o, 2 * t + 1) > 0.0) dz(o, 2 * t + 1) = v;
      }
    }
    const Matrix col = im2col(c.inputs[static_cast<std::size_t>(s)], k);
    MutMap dW(grad.data() + l.w, l.out, l.in * k);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + l.b, l.out);
    dW.noalias() += dz * col.transpose();
    db += dz.rowwise().sum();
    if (s == 0) break;
    const ConstMap W(params_.data() + l.w, l.out, l.in * k);
    const Matrix dcol = W.transpose() * dz;
    dp = Matrix::Zero(l.in, c.inputs[static_cast<std::size_t>(s)].cols());
    col2im_add(dcol, k, dp);
  }
}

EmbeddingModel::Smoothness EmbeddingModel::smoothness(const double* epoch) const {
  Cache c;
  forward(epoch, &c);
  Smoothness s;
  s.min_abs_preactivation = std::numeric_limits<double>::infinity();
  for (const auto& z : c.pre) {
    // Odd trailing columns are dropped by the pooling and never reach the loss.
    const Eigen::Index used = (z.cols() / 2) * 2;
    if (used > 0) s.min_abs_preactivation = std::min(s.min_abs_preactivation, z.leftCols(used).cwiseAbs().minCoeff());
  }
  s.raw_norm = c.raw.norm();
  return s;
}

Eigen::VectorXd EmbeddingModel::embed_one(const double* epoch) const { return forward(epoch, nullptr); }

void EmbeddingModel::check_geometry(const EpochSet& epochs) const {
  if (static_cast<int>(epochs.n_channels) != n_channels_ ||
      static_cast<int>(epochs.n_times) != n_times_)
    throw ValidationError("epochs", "geometry " + std::to_string(epochs.n_channels) + "x" +
                                        std::to_string(epochs.n_times) + " does not match model " +
                                        std::to_string(n_channels_) + "x" +
                                        std::to_string(n_times_));
}

Eigen::MatrixXd EmbeddingModel::embed(const EpochSet& epochs) const {
  std::vector<std::size_t> rows(epochs.n_epochs);
  std::iota(rows.begin(), rows.end(), 0);
  return embed(epochs, rows);
}

Eigen::MatrixXd EmbeddingModel::embed(const EpochSet& epochs, std::span<const std::size_t> rows) const {
  check_geometry(epochs);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), config_.embedding_dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = embed_one(epochs.channel(rows[r], 0)).transpose();
  return out;
}

double EmbeddingModel::loss_and_gradient(std::span<const double* const> inputs,
                                         std::span<const int> labels,
                                         std::vector<double>& gradient) const {
  gradient.assign(params_.size(), 0.0);
  const auto n = inputs.size();
  std::vector<Cache> caches(n);
  Eigen::MatrixXd E(static_cast<Eigen::Index>(n), config_.embedding_dim);
  for (std::size_t i = 0; i < n; ++i)
    E.row(static_cast<Eigen::Index>(i)) = forward(inputs[i], &caches[i]).transpose();
  Eigen::MatrixXd dE;
  const double loss = batch_hard_loss(E, labels, config_.margin, &dE);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd de = dE.row(static_cast<Eigen::Index>(i)).transpose();
    if (de.squaredNorm() == 0.0) continue;
    backward(caches[i], de, gradient);
  }
  return loss;
}

Mining batch_hard(const Eigen::MatrixXd& E, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(E.rows());
  const Eigen::VectorXd sq = E.rowwise().squaredNorm();
  const Eigen::MatrixXd gram = E * E.transpose();
  Mining m;
  m.positive.assign(n, -1);
  m.negative.assign(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    double best_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const auto ai = static_cast<Eigen::Index>(a), ji = static_cast<Eigen::Index>(j);
      const double d = std::max(0.0, sq(ai) + sq(ji) - 2.0 * gram(ai, ji));
      if (labels[j] == labels[a]) {
        if (d > best_pos) best_pos = d, m.positive[a] = static_cast<int>(j);
      } else if (d < best_neg) {
        best_neg = d, m.negative[a] = static_cast<int>(j);
      }
    }
  }
  return m;
}

TripletResult triplet_loss(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P,
                           const Eigen::MatrixXd& N, double margin) {
  TripletResult r;
  const auto n = A.rows();
  r.d_anchor = Eigen::MatrixXd::Zero(n, A.cols());
  r.d_positive = Eigen::MatrixXd::Zero(n, A.cols());
  r.d_negative = Eigen::MatrixXd::Zero(n, A.cols());
  if (n == 0) return r;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = (A.row(i) - P.row(i)).squaredNorm() - (A.row(i) - N.row(i)).squaredNorm() + margin;
    if (v <= 0.0) continue;
    r.loss += v;
    r.d_anchor.row(i) = 2.0 * (N.row(i) - P.row(i));
    r.d_positive.row(i) = -2.0 * (A.row(i) - P.row(i));
    r.d_negative.row(i) = 2.0 * (A.row(i) - N.row(i));
  }
  const double inv = 1.0 / static_cast<double>(n);
  r.loss *= inv;
  r.d_anchor *= inv;
  r.d_positive *= inv;
  r.d_negative *= inv;
  return r;
}

double batch_hard_loss(const Eigen::MatrixXd& E, std::span<const int> labels, double margin,
                       Eigen::MatrixXd* gradient) {
  const auto mining = batch_hard(E, labels);
  std::vector<Eigen::Index> anchors;
  for (std::size_t a = 0; a < mining.positive.size(); ++a)
    if (mining.positive[a] >= 0 && mining.negative[a] >= 0) anchors.push_back(static_cast<Eigen::Index>(a));
  if (gradient) *gradient = Eigen::MatrixXd::Zero(E.rows(), E.cols());
  if (anchors.empty()) return 0.0;

  const auto m = static_cast<Eigen::Index>(anchors.size());
  Eigen::MatrixXd A(m, E.cols()), P(m, E.cols()), N(m, E.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto a = anchors[static_cast<std::size_t>(r)];
    A.row(r) = E.row(a);
    P.row(r) = E.row(mining.positive[static_cast<std::size_t>(a)]);
    N.row(r) = E.row(mining.negative[static_cast<std::size_t>(a)]);
  }
  const auto res = triplet_loss(A, P, N, margin);
  if (gradient) {
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto a = anchors[static_cast<std::size_t>(r)];
      gradient->row(a) += res.d_anchor.row(r);
      gradient->row(mining.positive[static_cast<std::size_t>(a)]) += res.d_positive.row(r);
      gradient->row(mining.negative[static_cast<std::size_t>(a)]) += res.d_negative.row(r);
    }
  }
  return res.loss;
}

EmbeddingModel train(EmbeddingModel model, const EpochSet& epochs, const TwinConfig& config) {
  validate(config);
  if (static_cast<int>(epochs.n_channels) != model.n_channels() ||
      static_cast<int>(epochs.n_times) != model.n_times())
    throw ValidationError("epochs", "training geometry does not match the model");
  std::map<std::string, int> ids;
  std::vector<int> labels;
  for (const auto& s : epochs.subject_ids) {
    const auto it = ids.emplace(s, static_cast<int>(ids.size())).first;
    labels.push_back(it->second);
  }
  if (ids.size() < 2) throw TrainingError("TwinNeuralNetwork: training needs at least two subjects");

  double sum = 0.0, sumsq = 0.0;
  for (double v : epochs.data) sum += v, sumsq += v * v;
  const double count = static_cast<double>(epochs.data.size());
  const double mean = sum / count;
  const double sd = std::sqrt(std::max(0.0, sumsq / count - mean * mean));
  model.set_input_scale(sd > 0.0 ? 1.0 / sd : 1.0);

  auto& params = model.parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  long step = 0;
  const auto n = epochs.n_epochs;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (int ep = 0; ep < config.epochs; ++ep) {
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(config.seed, {fnv1a("twin-epoch"), static_cast<std::uint64_t>(ep)});
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const auto stop = std::min(n, start + batch);
      if (stop - start < 2) continue;
      std::vector<const double*> inputs;
      std::vector<int> batch_labels;
      for (auto i = start; i < stop; ++i) {
        inputs.push_back(epochs.channel(order[i], 0));
        batch_labels.push_back(labels[order[i]]);
      }
      const double loss = model.loss_and_gradient(inputs, batch_labels, grad);
      loss_sum += loss;
      ++n_batches;
      ++step;
      const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        m[p] = kAdamBeta1 * m[p] + (1.0 - kAdamBeta1) * grad[p];
        v[p] = kAdamBeta2 * v[p] + (1.0 - kAdamBeta2) * grad[p] * grad[p];
        params[p] -= config.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + kAdamEps);
      }
    }
    model.loss_log().push_back(n_batches ? loss_sum / n_batches : 0.0);
    if (config.verbose)
      std::fprintf(stderr, "twin epoch %d/%d loss %.6f\n", ep + 1, config.epochs,
                   model.loss_log().back());
  }
  return model;
}

Eigen::VectorXd enrollment_template(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() == 0) throw ParamError("enrollment set is empty");
  Eigen::VectorXd t = embeddings.colwise().mean().transpose();
  return t / std::max(t.norm(), kNormEps);
}

std::vector<double> cosine_scores(const Eigen::VectorXd& tmpl, const Eigen::MatrixXd& probes) {
  std::vector<double> out(static_cast<std::size_t>(probes.rows()));
  const double tn = std::max(tmpl.norm(), kNormEps);
  for (Eigen::Index r = 0; r < probes.rows(); ++r) {
    const double pn = std::max(probes.row(r).norm(), kNormEps);
    out[static_cast<std::size_t>(r)] = std::clamp(probes.row(r).dot(tmpl) / (tn * pn), -1.0, 1.0);
  }
  return out;
}

std::vector<double> enroll_and_score(const EmbeddingModel& model, const EpochSet& enrollment,
                                     const EpochSet& probes) {
  if (enrollment.n_epochs == 0) throw ParamError("enrollment set is empty");
  return cosine_scores(enrollment_template(model.embed(enrollment)), model.embed(probes));
}

}  // namespace neuroid
