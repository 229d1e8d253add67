#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "neuroid/error.hpp"
#include "neuroid/evaluation.hpp"
#include "support.hpp"

using namespace neuroid;
namespace ts = testing_support;

namespace {

// Rows grouped by subject and session; each subject sits at its own random
// centre scaled by `spread`.
FeatureMatrix gaussian_features(int n_subjects, int n_sessions, int per_cell, int dim, double spread,
                                std::uint64_t seed) {
  auto rng = make_rng(seed, {fnv1a("features")});
  FeatureMatrix fm;
  std::vector<std::vector<double>> centre(static_cast<std::size_t>(n_subjects), std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& c : centre)
    for (auto& v : c) v = spread * standard_normal(rng);
  const int n = n_subjects * n_sessions * per_cell;
  fm.values.resize(n, dim);
  int row = 0;
  for (int s = 0; s < n_subjects; ++s)
    for (int q = 0; q < n_sessions; ++q)
      for (int i = 0; i < per_cell; ++i, ++row) {
        fm.subject_ids.push_back("sub" + std::to_string(10 + s));
        fm.session_ids.push_back("S" + std::to_string(q + 1));
        for (int j = 0; j < dim; ++j)
          fm.values(row, j) = centre[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] + standard_normal(rng);
      }
  for (int q = 0; q < n_sessions; ++q) fm.session_order.push_back("S" + std::to_string(q + 1));
  for (int j = 0; j < dim; ++j) fm.feature_names.push_back("f" + std::to_string(j));
  return fm;
}

std::set<std::string> subjects_of(const std::vector<std::string>& ids, const std::vector<std::size_t>& rows) {
  std::set<std::string> out;
  for (auto r : rows) out.insert(ids[r]);
  return out;
}

double mean_eer(const EvalOutput& out) {
  double s = 0.0;
  for (const auto& set : out.score_sets) s += eer(set);
  return s / static_cast<double>(out.score_sets.size());
}

EpochSet tone_epochs(int n_subjects, int n_sessions, int per_cell, std::uint64_t seed) {
  EpochSet e;
  e.n_channels = 2;
  e.n_times = 224;
  e.sampling_rate_hz = 256.0;
  auto rng = make_rng(seed, {fnv1a("tones")});
  for (int s = 0; s < n_subjects; ++s)
    for (int q = 0; q < n_sessions; ++q)
      for (int i = 0; i < per_cell; ++i) {
        e.subject_ids.push_back("sub" + std::to_string(s));
        e.session_ids.push_back("S" + std::to_string(q + 1));
        for (std::size_t c = 0; c < e.n_channels; ++c)
          for (std::size_t t = 0; t < e.n_times; ++t)
            e.data.push_back(std::sin(2.0 * std::numbers::pi * (3.0 + 2.0 * s) * t / 256.0) +
                             0.3 * standard_normal(rng));
        ++e.n_epochs;
      }
  for (int q = 0; q < n_sessions; ++q) e.session_order.push_back("S" + std::to_string(q + 1));
  e.channel_names = {"C0", "C1"};
  return e;
}

}  // namespace

TEST(Folds, KnownAttackerStratifiesBothClasses) {
  // 8 genuine and 80 impostor rows: every fold tests 2 genuine and 20 impostor.
  std::vector<std::string> ids(8, "u");
  for (int i = 0; i < 80; ++i) ids.push_back("o" + std::to_string(i % 10));
  const auto folds = known_attacker_folds(ids, "u", 4, 4, 1);
  ASSERT_EQ(folds.size(), 4u);
  for (const auto& f : folds) {
    std::size_t g = 0, i = 0;
    for (auto r : f.test) (ids[r] == "u" ? g : i) += 1;
    EXPECT_EQ(g, 2u);
    EXPECT_EQ(i, 20u);
    EXPECT_EQ(f.train.size() + f.test.size(), ids.size());
  }
  EXPECT_EQ(ts::check_known_folds(ids.size(), folds), "");
}

TEST(Folds, TooFewGenuineRowsSkipsTheUser) {
  std::vector<std::string> ids(3, "u");
  for (int i = 0; i < 40; ++i) ids.push_back("o" + std::to_string(i % 8));
  EXPECT_THROW(known_attacker_folds(ids, "u", 4, 4, 1), SkipUser);
  EXPECT_THROW(unknown_attacker_folds(ids, "u", 4, 4, 1), SkipUser);
  EXPECT_NO_THROW(known_attacker_folds(ids, "u", 2, 3, 1));
}

TEST(Folds, UnknownAttackerSeparatesImpostorSubjects) {
  std::vector<std::string> ids(8, "u");
  for (int s = 0; s < 12; ++s)
    for (int i = 0; i < 5; ++i) ids.push_back("o" + std::to_string(s));
  const auto folds = unknown_attacker_folds(ids, "u", 4, 4, 3);
  ASSERT_EQ(folds.size(), 4u);
  for (const auto& f : folds) {
    auto test_subjects = subjects_of(ids, f.test);
    test_subjects.erase("u");
    EXPECT_EQ(test_subjects.size(), 3u);
  }
  EXPECT_EQ(ts::check_unknown_folds(ids, "u", folds), "");
  // Three impostor subjects cannot fill four groups.
  std::vector<std::string> few(8, "u");
  for (int s = 0; s < 3; ++s) few.insert(few.end(), 4, "o" + std::to_string(s));
  EXPECT_THROW(unknown_attacker_folds(few, "u", 4, 4, 1), ParamError);
}

TEST(Folds, GroupsAreBalancedAndSeeded) {
  std::vector<std::string> subjects;
  for (int s = 0; s < 10; ++s) subjects.push_back("s" + std::to_string(s));
  const auto a = group_subjects(subjects, 4, 7);
  EXPECT_EQ(a, group_subjects(subjects, 4, 7));
  std::map<int, int> sizes;
  for (const auto& [_, g] : a) ++sizes[g];
  for (const auto& [g, n] : sizes) {
    EXPECT_GE(n, 2) << g;
    EXPECT_LE(n, 3) << g;
  }
  EXPECT_EQ(sizes.size(), 4u);
}

TEST(Folds, RandomDatasetsKeepSplitHygiene) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto rng = make_rng(seed, {fnv1a("hygiene")});
    const int n_subjects = 5 + static_cast<int>(uniform_index(rng, 8));
    const auto ids = ts::random_subject_column(rng, n_subjects, 4, 15);
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    for (int s = 0; s < n_subjects; ++s) {
      const auto user = "s" + std::to_string(s);
      EXPECT_EQ(ts::check_known_folds(ids.size(), known_attacker_folds(ids, user, k, 1, seed)), "");
      EXPECT_EQ(ts::check_unknown_folds(ids, user, unknown_attacker_folds(ids, user, k, 1, seed)), "");
    }
  }
}

TEST(Sessions, OrderAndPairs) {
  const std::vector<std::string> ids{"S3", "S1", "S2", "S1"};
  const std::vector<std::string> order{"S1", "S2", "S3"};
  const auto s = ordered_sessions(ids, order);
  EXPECT_EQ(s, order);
  const auto p = session_pairs(s);
  const std::vector<std::pair<std::string, std::string>> want{{"S1", "S2"}, {"S1", "S3"}, {"S2", "S3"}};
  EXPECT_EQ(p, want);
  EXPECT_EQ(to_string(Scheme::MultiSession), "multi");
  EXPECT_EQ(attacker_from_string("known"), Attacker::Known);
  EXPECT_THROW(scheme_from_string("both"), ParamError);
}

TEST(Shallow, OneScoreSetPerUserAndFold) {
  const auto fm = gaussian_features(10, 1, 12, 4, 2.0, 1);
  for (auto attacker : {Attacker::Known, Attacker::Unknown}) {
    EvalPlan plan;
    plan.attacker = attacker;
    const auto out = evaluate_shallow(fm, default_spec(ClassifierKind::LDA), plan, "p");
    EXPECT_EQ(out.score_sets.size(), 40u);
    EXPECT_TRUE(out.skips.empty());
    // Every row of the session is scored exactly once per user.
    std::map<std::string, std::size_t> genuine, impostor;
    for (const auto& s : out.score_sets) {
      genuine[s.context.user_id] += s.genuine.size();
      impostor[s.context.user_id] += s.impostor.size();
      EXPECT_EQ(s.genuine.size(), s.genuine_rows.size());
      EXPECT_EQ(s.impostor.size(), s.impostor_rows.size());
      EXPECT_EQ(s.context.pipeline_id, "p");
    }
    for (const auto& [user, n] : genuine) {
      EXPECT_EQ(n, 12u) << user;
      EXPECT_EQ(impostor[user], 108u) << user;
    }
  }
}

TEST(Shallow, NoRowLeaksIntoItsOwnTraining) {
  const auto fm = gaussian_features(8, 2, 8, 3, 1.0, 2);
  for (auto scheme : {Scheme::SingleSession, Scheme::MultiSession})
    for (auto attacker : {Attacker::Known, Attacker::Unknown}) {
      EvalPlan plan;
      plan.scheme = scheme;
      plan.attacker = attacker;
      const auto out = evaluate_shallow(fm, default_spec(ClassifierKind::NB), plan, "p");
      ASSERT_FALSE(out.score_sets.empty());
      for (const auto& s : out.score_sets) {
        const std::set<std::size_t> fit(s.fit_rows.begin(), s.fit_rows.end());
        for (auto r : s.genuine_rows) {
          EXPECT_FALSE(fit.count(r));
          EXPECT_EQ(fm.subject_ids[r], s.context.user_id);
          EXPECT_EQ(fm.session_ids[r], s.context.probe_session);
        }
        for (auto r : s.impostor_rows) {
          EXPECT_FALSE(fit.count(r));
          EXPECT_NE(fm.subject_ids[r], s.context.user_id);
          EXPECT_EQ(fm.session_ids[r], s.context.probe_session);
        }
        for (auto r : s.fit_rows) EXPECT_EQ(fm.session_ids[r], s.context.enroll_session);
        if (attacker == Attacker::Unknown) {
          const auto trained_on = subjects_of(fm.subject_ids, s.fit_rows);
          for (const auto& who : subjects_of(fm.subject_ids, s.impostor_rows)) EXPECT_FALSE(trained_on.count(who)) << who;
        }
      }
    }
}

TEST(Shallow, MultiSessionCoversEveryForwardPair) {
  const auto fm = gaussian_features(6, 3, 8, 3, 1.0, 3);
  EvalPlan plan;
  plan.scheme = Scheme::MultiSession;
  plan.attacker = Attacker::Known;
  const auto out = evaluate_shallow(fm, default_spec(ClassifierKind::LDA), plan, "p");
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& s : out.score_sets) pairs.insert({s.context.enroll_session, s.context.probe_session});
  const std::set<std::pair<std::string, std::string>> want{{"S1", "S2"}, {"S1", "S3"}, {"S2", "S3"}};
  EXPECT_EQ(pairs, want);
  EXPECT_EQ(out.score_sets.size(), 3u * 6u * 4u);

  const auto one = gaussian_features(6, 1, 8, 3, 1.0, 3);
  EXPECT_THROW(evaluate_shallow(one, default_spec(ClassifierKind::LDA), plan, "p"), ParamError);
}

TEST(Shallow, SkippedUsersAreRecorded) {
  auto fm = gaussian_features(6, 1, 8, 3, 1.0, 4);
  // Rename all but three rows of the first subject so it falls below the minimum.
  for (int r = 3; r < 8; ++r) fm.subject_ids[static_cast<std::size_t>(r)] = "sub11";
  EvalPlan plan;
  plan.attacker = Attacker::Known;
  const auto out = evaluate_shallow(fm, default_spec(ClassifierKind::LDA), plan, "p");
  ASSERT_EQ(out.skips.size(), 1u);
  EXPECT_EQ(out.skips[0].user, "sub10");
  EXPECT_EQ(out.skips[0].fold, -1);
  EXPECT_EQ(out.score_sets.size(), 5u * 4u);
  for (const auto& s : out.score_sets) EXPECT_NE(s.context.user_id, "sub10");
}

TEST(Shallow, IsDeterministic) {
  const auto fm = gaussian_features(6, 1, 10, 3, 1.0, 5);
  EvalPlan plan;
  const auto a = evaluate_shallow(fm, default_spec(ClassifierKind::RF), plan, "p");
  const auto b = evaluate_shallow(fm, default_spec(ClassifierKind::RF), plan, "p");
  ASSERT_EQ(a.score_sets.size(), b.score_sets.size());
  for (std::size_t i = 0; i < a.score_sets.size(); ++i) {
    EXPECT_EQ(a.score_sets[i].genuine, b.score_sets[i].genuine);
    EXPECT_EQ(a.score_sets[i].impostor, b.score_sets[i].impostor);
    EXPECT_EQ(a.score_sets[i].context, b.score_sets[i].context);
  }
}

TEST(Shallow, ErrorFallsAsSubjectsSeparate) {
  EvalPlan plan;
  std::vector<double> e;
  for (double spread : {0.0, 0.7, 2.0})
    e.push_back(mean_eer(evaluate_shallow(gaussian_features(8, 1, 16, 4, spread, 6),
                                          default_spec(ClassifierKind::LDA), plan, "p")));
  EXPECT_GT(e[0], 0.3);
  EXPECT_LT(e[1], e[0]);
  EXPECT_LT(e[2], e[1]);
  EXPECT_LT(e[2], 0.5 * e[0]);
}

TEST(Twin, EvaluationKeepsAttackersOutOfTraining) {
  const auto epochs = tone_epochs(8, 2, 8, 4);
  TwinConfig cfg;
  cfg.conv_filters = {4, 4, 4, 4, 4};
  cfg.embedding_dim = 8;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  for (auto scheme : {Scheme::SingleSession, Scheme::MultiSession}) {
    EvalPlan plan;
    plan.scheme = scheme;
    const auto out = evaluate_twin(epochs, cfg, plan, "tnn");
    // Two users per outer fold, four inner folds each, per session (pair).
    const std::size_t expect = (scheme == Scheme::SingleSession ? 2u : 1u) * 8u * 4u;
    EXPECT_EQ(out.score_sets.size(), expect);
    for (const auto& s : out.score_sets) {
      const std::set<std::size_t> fit(s.fit_rows.begin(), s.fit_rows.end());
      for (auto r : s.genuine_rows) {
        EXPECT_FALSE(fit.count(r));
        EXPECT_EQ(epochs.subject_ids[r], s.context.user_id);
      }
      const auto trained_on = subjects_of(epochs.subject_ids, s.fit_rows);
      for (auto r : s.impostor_rows) {
        EXPECT_FALSE(fit.count(r));
        EXPECT_NE(epochs.subject_ids[r], s.context.user_id);
        EXPECT_FALSE(trained_on.count(epochs.subject_ids[r]));
      }
    }
  }
  auto few = tone_epochs(3, 1, 8, 4);
  EXPECT_THROW(evaluate_twin(few, cfg, EvalPlan{}, "tnn"), ParamError);
}
