#include <gtest/gtest.h>

#include <numeric>

#include "neuroid/error.hpp"
#include "neuroid/twin.hpp"
#include "support.hpp"
#include "twin_gradcheck.hpp"

using namespace neuroid;
namespace ts = testing_support;

namespace {

TwinConfig tiny_config(std::uint64_t seed = 1) {
  TwinConfig c;
  c.conv_filters = {4, 4, 4, 4, 4};
  c.embedding_dim = 8;
  c.batch_size = 16;
  c.epochs = 3;
  c.learning_rate = 1e-3;
  c.seed = seed;
  return c;
}

// Subjects differ by the frequency of a dominant tone, plus white noise.
EpochSet tone_epochs(int n_subjects, int per_subject, int n_channels, int n_times, std::uint64_t seed) {
  EpochSet e;
  e.n_epochs = static_cast<std::size_t>(n_subjects * per_subject);
  e.n_channels = static_cast<std::size_t>(n_channels);
  e.n_times = static_cast<std::size_t>(n_times);
  e.sampling_rate_hz = 256.0;
  e.tmax_s = (n_times - 1) / 256.0;
  e.session_order = {"S1"};
  auto rng = make_rng(seed, {fnv1a("tones")});
  for (int s = 0; s < n_subjects; ++s)
    for (int k = 0; k < per_subject; ++k) {
      e.subject_ids.push_back("sub" + std::to_string(s));
      e.session_ids.push_back("S1");
      const double phase = 2.0 * std::numbers::pi * uniform01(rng);
      for (int c = 0; c < n_channels; ++c)
        for (int t = 0; t < n_times; ++t)
          e.data.push_back(10.0 * std::sin(2.0 * std::numbers::pi * (4.0 + 6.0 * s) * t / 256.0 + phase + c) +
                           3.0 * standard_normal(rng));
    }
  for (int c = 0; c < n_channels; ++c) e.channel_names.push_back("C" + std::to_string(c));
  return e;
}

// Counts surviving samples by sliding the kernel and pairing outputs.
std::vector<int> enumerate_lengths(int n, int k, int stages) {
  std::vector<int> out;
  for (int s = 0; s < stages; ++s) {
    int conv = 0;
    for (int start = 0; start + k <= n; ++start) ++conv;
    int pooled = 0;
    for (int p = 0; p + 1 < conv; p += 2) ++pooled;
    out.push_back(pooled);
    n = pooled;
  }
  return out;
}

}  // namespace

TEST(TwinGeometry, StageLengthsMatchEnumeration) {
  for (int k : {1, 3, 7, 9})
    for (int n : {224, 225, 256, 300, 513, 1000})
      EXPECT_EQ(stage_lengths(n, k), enumerate_lengths(n, k, kTwinStages)) << n << " " << k;
  TwinConfig c;
  EXPECT_EQ(min_time_samples(c), 224);
  EXPECT_GE(stage_lengths(224, 7).back(), 1);
}

TEST(TwinGeometry, ShortEpochsAreRejectedWithTheMinimum) {
  try {
    EmbeddingModel::build(TwinConfig{}, 8, 100);
    FAIL() << "expected ParamError";
  } catch (const ParamError& e) {
    EXPECT_NE(std::string(e.what()).find("224"), std::string::npos) << e.what();
  }
  TwinConfig bad;
  bad.conv_filters = {8, 8};
  EXPECT_THROW(validate(bad), ParamError);
  bad = TwinConfig{};
  bad.margin = 0.0;
  EXPECT_THROW(validate(bad), ParamError);
}

TEST(TwinModel, ParameterCountAndEmbeddingShape) {
  const TwinConfig c;
  const auto m = EmbeddingModel::build(c, 8, 256);
  std::size_t expect = 0;
  int in = 8;
  for (int f : c.conv_filters) {
    expect += static_cast<std::size_t>(f * in * c.kernel_time + f);
    in = f;
  }
  expect += static_cast<std::size_t>(c.embedding_dim * in + c.embedding_dim);
  EXPECT_EQ(m.parameters().size(), expect);

  const auto e = tone_epochs(2, 3, 8, 256, 1);
  const auto E = m.embed(e);
  ASSERT_EQ(E.rows(), 6);
  ASSERT_EQ(E.cols(), 32);
  for (Eigen::Index i = 0; i < E.rows(); ++i) EXPECT_NEAR(E.row(i).norm(), 1.0, 1e-12);
  EXPECT_THROW(m.embed(tone_epochs(2, 3, 7, 256, 1)), ValidationError);
}

TEST(TwinModel, InitialisationFollowsTheSeed) {
  auto c = TwinConfig{};
  const auto a = EmbeddingModel::build(c, 4, 256);
  const auto b = EmbeddingModel::build(c, 4, 256);
  EXPECT_EQ(a.parameters(), b.parameters());
  c.seed = 2;
  EXPECT_NE(EmbeddingModel::build(c, 4, 256).parameters(), a.parameters());
}

TEST(Triplet, WorkedExamples) {
  Eigen::MatrixXd A(1, 2), P(1, 2), N(1, 2);
  A << 0.0, 0.0;
  P << std::sqrt(0.5), 0.0;
  N << 0.0, std::sqrt(0.2);
  EXPECT_NEAR(triplet_loss(A, P, N, 1.0).loss, 0.5 - 0.2 + 1.0, 1e-12);
  // Margin already satisfied: no loss, no gradient.
  N << 0.0, 3.0;
  const auto r = triplet_loss(A, P, N, 1.0);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.d_anchor.norm(), 0.0);
}

TEST(Triplet, GradientMatchesFiniteDifferences) {
  auto rng = make_rng(4, {});
  Eigen::MatrixXd X[3];
  for (auto& m : X) {
    m.resize(5, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.5 * standard_normal(rng);
  }
  const double margin = 1.0;
  const auto r = triplet_loss(X[0], X[1], X[2], margin);
  const Eigen::MatrixXd* grads[3] = {&r.d_anchor, &r.d_positive, &r.d_negative};
  const double h = 1e-6;
  for (int which = 0; which < 3; ++which)
    for (Eigen::Index i = 0; i < X[which].size(); ++i) {
      Eigen::MatrixXd Y[3] = {X[0], X[1], X[2]};
      Y[which].data()[i] += h;
      const double up = triplet_loss(Y[0], Y[1], Y[2], margin).loss;
      Y[which].data()[i] -= 2 * h;
      const double down = triplet_loss(Y[0], Y[1], Y[2], margin).loss;
      EXPECT_NEAR((up - down) / (2 * h), grads[which]->data()[i], 1e-4);
    }
}

TEST(Triplet, BatchHardMiningMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto rng = make_rng(seed, {fnv1a("mining")});
    const int n = 12;
    Eigen::MatrixXd E(n, 4);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      labels.push_back(static_cast<int>(uniform_index(rng, 3)));
      for (int j = 0; j < 4; ++j) E(i, j) = standard_normal(rng);
    }
    const auto m = batch_hard(E, labels);
    for (int a = 0; a < n; ++a) {
      int pos = -1, neg = -1;
      double dp = -1.0, dn = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        const double d = (E.row(a) - E.row(j)).squaredNorm();
        if (j != a && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)] && d > dp) {
          dp = d;
          pos = j;
        }
        if (labels[static_cast<std::size_t>(j)] != labels[static_cast<std::size_t>(a)] && d < dn) {
          dn = d;
          neg = j;
        }
      }
      EXPECT_EQ(m.positive[static_cast<std::size_t>(a)], pos);
      EXPECT_EQ(m.negative[static_cast<std::size_t>(a)], neg);
    }
  }
}

TEST(Triplet, BatchHardLossSkipsAnchorsWithoutPairs) {
  Eigen::MatrixXd E(3, 2);
  E << 0.0, 0.0, 1.0, 0.0, 0.0, 2.0;
  const std::vector<int> labels{0, 0, 1};
  // Anchors 0 and 1 have a positive and a negative; anchor 2 has no positive.
  const double l0 = std::max(0.0, 1.0 - 4.0 + 1.0);
  const double l1 = std::max(0.0, 1.0 - 5.0 + 1.0);
  EXPECT_NEAR(batch_hard_loss(E, labels, 1.0, nullptr), (l0 + l1) / 2.0, 1e-12);
  const double l0b = std::max(0.0, 1.0 - 4.0 + 4.0);
  const double l1b = std::max(0.0, 1.0 - 5.0 + 4.0);
  EXPECT_NEAR(batch_hard_loss(E, labels, 4.0, nullptr), (l0b + l1b) / 2.0, 1e-12);
}

TEST(TwinGradient, BackpropMatchesFiniteDifferences) {
  const auto r = ts::twin_gradient_check();
  ASSERT_TRUE(r.found_point);
  EXPECT_EQ(r.violations, 0u) << "seed " << r.seed << " rel " << r.max_rel_error << " abs "
                              << r.max_abs_error;
  EXPECT_GT(r.nonzero_gradients, r.n_params / 2);
  EXPECT_GT(r.loss, 0.0);
}

TEST(TwinTraining, LossFallsOverTheFirstEpochs) {
  const auto e = tone_epochs(4, 16, 2, 224, 9);
  int decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cfg = tiny_config(seed);
    const auto m = train(EmbeddingModel::build(cfg, 2, 224), e, cfg);
    const auto& log = m.loss_log();
    ASSERT_EQ(log.size(), 3u);
    if (log[1] < log[0] && log[2] < log[1]) ++decreasing;
  }
  EXPECT_GE(decreasing, 4);
}

TEST(TwinTraining, IsDeterministicAndNeedsTwoSubjects) {
  const auto e = tone_epochs(3, 6, 2, 224, 2);
  auto cfg = tiny_config();
  cfg.epochs = 2;
  const auto a = train(EmbeddingModel::build(cfg, 2, 224), e, cfg);
  const auto b = train(EmbeddingModel::build(cfg, 2, 224), e, cfg);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_EQ(a.loss_log(), b.loss_log());
  const auto one = tone_epochs(1, 6, 2, 224, 2);
  EXPECT_THROW(train(EmbeddingModel::build(cfg, 2, 224), one, cfg), TrainingError);
}

TEST(TwinScoring, CosineBehaviour) {
  Eigen::VectorXd t(3);
  t << 1.0, 0.0, 0.0;
  Eigen::MatrixXd probes(3, 3);
  probes << 2.0, 0.0, 0.0,
            0.0, 5.0, 0.0,
           -1.0, 0.0, 0.0;
  const auto s = cosine_scores(t, probes);
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  EXPECT_NEAR(s[1], 0.0, 1e-12);
  EXPECT_NEAR(s[2], -1.0, 1e-12);
  EXPECT_THROW(enrollment_template(Eigen::MatrixXd(0, 3)), ParamError);
  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.0, 0.0, 1.0;
  const auto tmpl = enrollment_template(rows);
  EXPECT_NEAR(tmpl.norm(), 1.0, 1e-12);
  EXPECT_NEAR(tmpl(0), std::sqrt(0.5), 1e-12);
}

TEST(TwinScoring, EnrollAndScore) {
  const auto cfg = tiny_config();
  const auto m = EmbeddingModel::build(cfg, 2, 224);
  const auto e = tone_epochs(2, 4, 2, 224, 3);
  // A probe identical to the single enrolled epoch scores one.
  const auto same = enroll_and_score(m, e.select({0}), e.select({0}));
  EXPECT_NEAR(same[0], 1.0, 1e-12);
  // Enrollment order does not matter.
  const auto a = enroll_and_score(m, e.select({0, 1, 2}), e.select({4, 5, 6, 7}));
  const auto b = enroll_and_score(m, e.select({2, 0, 1}), e.select({4, 5, 6, 7}));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_THROW(enroll_and_score(m, e.select({}), e.select({0})), ParamError);
}
