#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neuroid/classifiers.hpp"
#include "neuroid/features.hpp"
#include "neuroid/metrics.hpp"
#include "neuroid/preprocess.hpp"
#include "neuroid/twin.hpp"

namespace neuroid {

enum class Scheme { SingleSession, MultiSession };
enum class Attacker { Known, Unknown };

std::string to_string(Scheme s);
std::string to_string(Attacker a);
Scheme scheme_from_string(const std::string& text);
Attacker attacker_from_string(const std::string& text);

struct EvalPlan {
  Scheme scheme = Scheme::SingleSession;
  Attacker attacker = Attacker::Unknown;
  int k_folds = 4;
  int min_samples_per_user = 4;
  std::uint64_t seed = 42;

  bool operator==(const EvalPlan&) const = default;
};

void validate(const EvalPlan& plan);

/// Row indices of one cross-validation round. Genuine rows are those whose
/// subject equals the user under test; everything else is impostor.
struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold over `rows` (defaults to every row). Impostor subjects
/// appear on both sides. Throws SkipUser when the user has fewer than
/// `min_samples` rows.
std::vector<Fold> known_attacker_folds(std::span<const std::string> subject_ids,
                                       const std::string& user, int k, int min_samples,
                                       std::uint64_t seed);
std::vector<Fold> known_attacker_folds(std::span<const std::string> subject_ids,
                                       std::span<const std::size_t> rows, const std::string& user,
                                       int k, int min_samples, std::uint64_t seed);

/// Impostor subjects split into k groups; fold i tests on group i and trains
/// on the rest, with the user's rows split stratified across the same folds.
/// Throws SkipUser (too few genuine rows) or ParamError (fewer than k
/// impostor subjects).
std::vector<Fold> unknown_attacker_folds(std::span<const std::string> subject_ids,
                                         const std::string& user, int k, int min_samples,
                                         std::uint64_t seed);
std::vector<Fold> unknown_attacker_folds(std::span<const std::string> subject_ids,
                                         std::span<const std::size_t> rows,
                                         const std::string& user, int k, int min_samples,
                                         std::uint64_t seed);

/// Seeded assignment of each subject (sorted, shuffled, round-robin) to one of
/// k groups. Returned in the sorted order of `subjects`.
std::vector<std::pair<std::string, int>> group_subjects(std::vector<std::string> subjects, int k,
                                                        std::uint64_t seed);

/// Sessions present in the data, in chronological order.
std::vector<std::string> ordered_sessions(std::span<const std::string> session_ids,
                                          std::span<const std::string> session_order);

/// Every (earlier, later) pair of sessions.
std::vector<std::pair<std::string, std::string>> session_pairs(
    const std::vector<std::string>& sessions);

/// A user (or a whole session) left out of the evaluation, with the reason.
struct SkipRecord {
  std::string user;
  std::string enroll_session;
  std::string probe_session;
  int fold = -1;  ///< -1: every fold
  std::string reason;
};

struct EvalOutput {
  std::vector<ScoreSet> score_sets;
  std::vector<SkipRecord> skips;
};

/// Per-user standardise + fit + score over the folds of `plan`.
EvalOutput evaluate_shallow(const FeatureMatrix& features, const ClassifierSpec& spec,
                            const EvalPlan& plan, const std::string& pipeline_id);

/// Embedding network trained per outer subject fold; per evaluation user an
/// inner fold split into enrollment and genuine probes.
EvalOutput evaluate_twin(const EpochSet& epochs, const TwinConfig& config, const EvalPlan& plan,
                         const std::string& pipeline_id);

}  // namespace neuroid
