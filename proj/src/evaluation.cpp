#include "neuroid/evaluation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "neuroid/error.hpp"
#include "neuroid/rng.hpp"

namespace neuroid {
namespace {

using Rows = std::vector<std::size_t>;

// Shuffles `items` and deals them round-robin into k parts, each kept sorted.
std::vector<Rows> deal(Rows items, int k, Rng& rng) {
  shuffle(items.begin(), items.end(), rng);
  std::vector<Rows> parts(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < items.size(); ++i)
    parts[i % static_cast<std::size_t>(k)].push_back(items[i]);
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

Rows all_rows(std::size_t n) {
  Rows r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

Rows merged(const Rows& a, const Rows& b) {
  Rows out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::uint64_t group_seed(std::uint64_t seed, const std::string& user) {
  return derive_seed(seed, {fnv1a(user), fnv1a("impostor-groups")});
}

void split_user(std::span<const std::string> subjects, std::span<const std::size_t> rows,
                const std::string& user, int min_samples, Rows& genuine, Rows& impostor) {
  for (auto r : rows) (subjects[r] == user ? genuine : impostor).push_back(r);
  std::sort(genuine.begin(), genuine.end());
  std::sort(impostor.begin(), impostor.end());
  if (static_cast<int>(genuine.size()) < min_samples)
    throw SkipUser("user " + user + " has " + std::to_string(genuine.size()) +
                   " samples, fewer than " + std::to_string(min_samples));
}

std::vector<std::string> unique_in_order(std::span<const std::string> values, const Rows& rows) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto r : rows)
    if (seen.insert(values[r]).second) out.push_back(values[r]);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const Rows& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// Session-restricted row lists, keyed by session id.
std::map<std::string, Rows> rows_by_session(std::span<const std::string> session_ids) {
  std::map<std::string, Rows> out;
  for (std::size_t r = 0; r < session_ids.size(); ++r) out[session_ids[r]].push_back(r);
  return out;
}

std::map<std::string, int> group_map(const std::vector<std::pair<std::string, int>>& groups) {
  return {groups.begin(), groups.end()};
}

// Scores one fold of the shallow path.
ScoreSet score_fold(const FeatureMatrix& fm, const ClassifierSpec& spec, const Rows& train,
                    const Rows& genuine, const Rows& impostor, const std::string& user,
                    std::uint64_t fit_seed) {
  const Eigen::MatrixXd Xtr_raw = take_rows(fm.values, train);
  const auto scaler = standardize_fit(Xtr_raw);
  const Eigen::MatrixXd Xtr = standardize_apply(scaler, Xtr_raw);
  std::vector<int> y;
  y.reserve(train.size());
  for (auto r : train) y.push_back(fm.subject_ids[r] == user ? 1 : 0);
  const auto model = fit(spec, Xtr, y, fit_seed);
  ScoreSet s;
  s.genuine = model.score(standardize_apply(scaler, take_rows(fm.values, genuine)));
  s.impostor = model.score(standardize_apply(scaler, take_rows(fm.values, impostor)));
  s.fit_rows = train;
  s.genuine_rows = genuine;
  s.impostor_rows = impostor;
  return s;
}

void split_test(const FeatureMatrix& fm, const Rows& test, const std::string& user, Rows& genuine,
                Rows& impostor) {
  for (auto r : test) (fm.subject_ids[r] == user ? genuine : impostor).push_back(r);
}

bool has_both(const std::vector<std::string>& subjects, const Rows& rows, const std::string& user) {
  bool g = false, i = false;
  for (auto r : rows) (subjects[r] == user ? g : i) = true;
  return g && i;
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::SingleSession ? "single" : "multi"; }
std::string to_string(Attacker a) { return a == Attacker::Known ? "known" : "unknown"; }

Scheme scheme_from_string(const std::string& t) {
  if (t == "single" || t == "single_session") return Scheme::SingleSession;
  if (t == "multi" || t == "multi_session") return Scheme::MultiSession;
  throw ParamError("unknown evaluation scheme '" + t + "' (expected single or multi)");
}

Attacker attacker_from_string(const std::string& t) {
  if (t == "known") return Attacker::Known;
  if (t == "unknown") return Attacker::Unknown;
  throw ParamError("unknown attacker model '" + t + "' (expected known or unknown)");
}

void validate(const EvalPlan& p) {
  if (p.k_folds < 2) throw ParamError("k_folds must be >= 2");
  if (p.min_samples_per_user < 1) throw ParamError("min_samples_per_user must be >= 1");
}

std::vector<std::pair<std::string, int>> group_subjects(std::vector<std::string> subjects, int k,
                                                        std::uint64_t seed) {
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = make_rng(seed, {});
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<std::string, int>> out(subjects.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    out[order[pos]] = {subjects[order[pos]], static_cast<int>(pos % static_cast<std::size_t>(k))};
  return out;
}

std::vector<Fold> known_attacker_folds(std::span<const std::string> subject_ids,
                                       const std::string& user, int k, int min_samples,
                                       std::uint64_t seed) {
  const auto rows = all_rows(subject_ids.size());
  return known_attacker_folds(subject_ids, rows, user, k, min_samples, seed);
}

std::vector<Fold> known_attacker_folds(std::span<const std::string> subject_ids,
                                       std::span<const std::size_t> rows, const std::string& user,
                                       int k, int min_samples, std::uint64_t seed) {
  if (k < 2) throw ParamError("k_folds must be >= 2");
  Rows genuine, impostor;
  split_user(subject_ids, rows, user, min_samples, genuine, impostor);
  if (impostor.empty()) throw ParamError("known attacker folds need at least one other subject");
  auto rng = make_rng(seed, {fnv1a(user), fnv1a("known")});
  const auto gparts = deal(genuine, k, rng);
  const auto iparts = deal(impostor, k, rng);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    folds[f].test = merged(gparts[f], iparts[f]);
    Rows train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train = merged(train, merged(gparts[g], iparts[g]));
    folds[f].train = std::move(train);
  }
  return folds;
}

std::vector<Fold> unknown_attacker_folds(std::span<const std::string> subject_ids,
                                         const std::string& user, int k, int min_samples,
                                         std::uint64_t seed) {
  const auto rows = all_rows(subject_ids.size());
  return unknown_attacker_folds(subject_ids, rows, user, k, min_samples, seed);
}

std::vector<Fold> unknown_attacker_folds(std::span<const std::string> subject_ids,
                                         std::span<const std::size_t> rows,
                                         const std::string& user, int k, int min_samples,
                                         std::uint64_t seed) {
  if (k < 2) throw ParamError("k_folds must be >= 2");
  Rows genuine, impostor;
  split_user(subject_ids, rows, user, min_samples, genuine, impostor);
  std::vector<std::string> others;
  for (auto r : impostor) others.push_back(subject_ids[r]);
  const auto groups = group_map(group_subjects(others, k, group_seed(seed, user)));
  if (static_cast<int>(groups.size()) < k)
    throw ParamError("unknown attacker folds need at least " + std::to_string(k) +
                     " impostor subjects, found " + std::to_string(groups.size()));
  auto rng = make_rng(seed, {fnv1a(user), fnv1a("unknown-genuine")});
  const auto gparts = deal(genuine, k, rng);
  std::vector<Rows> iparts(static_cast<std::size_t>(k));
  for (auto r : impostor) iparts[static_cast<std::size_t>(groups.at(subject_ids[r]))].push_back(r);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    folds[f].test = merged(gparts[f], iparts[f]);
    Rows train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train = merged(train, merged(gparts[g], iparts[g]));
    folds[f].train = std::move(train);
  }
  return folds;
}

std::vector<std::string> ordered_sessions(std::span<const std::string> session_ids,
                                          std::span<const std::string> session_order) {
  std::set<std::string> present(session_ids.begin(), session_ids.end());
  std::vector<std::string> out;
  for (const auto& s : session_order)
    if (present.erase(s)) out.push_back(s);
  // Sessions missing from the declared order keep first-appearance order.
  for (const auto& s : session_ids)
    if (present.erase(s)) out.push_back(s);
  return out;
}

std::vector<std::pair<std::string, std::string>> session_pairs(
    const std::vector<std::string>& sessions) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < sessions.size(); ++i)
    for (std::size_t j = i + 1; j < sessions.size(); ++j) out.emplace_back(sessions[i], sessions[j]);
  return out;
}

EvalOutput evaluate_shallow(const FeatureMatrix& fm, const ClassifierSpec& spec,
                            const EvalPlan& plan, const std::string& pipeline_id) {
  validate(plan);
  validate(spec);
  EvalOutput out;
  const auto& subjects = fm.subject_ids;
  const auto sessions = ordered_sessions(fm.session_ids, fm.session_order);
  const auto by_session = rows_by_session(fm.session_ids);
  const int k = plan.k_folds;

  const auto make_folds = [&](const Rows& rows, const std::string& user, std::uint64_t seed) {
    return plan.attacker == Attacker::Known
               ? known_attacker_folds(subjects, rows, user, k, plan.min_samples_per_user, seed)
               : unknown_attacker_folds(subjects, rows, user, k, plan.min_samples_per_user, seed);
  };

  if (plan.scheme == Scheme::SingleSession) {
    for (const auto& s : sessions) {
      const auto& rows = by_session.at(s);
      const auto seed = derive_seed(plan.seed, {fnv1a(s)});
      const auto before = out.score_sets.size();
      for (const auto& user : unique_in_order(subjects, rows)) {
        std::vector<Fold> folds;
        try {
          folds = make_folds(rows, user, seed);
        } catch (const SkipUser& e) {
          out.skips.push_back({user, s, s, -1, e.what()});
          continue;
        }
        for (std::size_t f = 0; f < folds.size(); ++f) {
          Rows genuine, impostor;
          split_test(fm, folds[f].test, user, genuine, impostor);
          if (genuine.empty() || impostor.empty() || !has_both(subjects, folds[f].train, user)) {
            out.skips.push_back({user, s, s, static_cast<int>(f), "fold lacks a class"});
            continue;
          }
          auto set = score_fold(fm, spec, folds[f].train, genuine, impostor, user,
                                derive_seed(plan.seed, {fnv1a(user), fnv1a(s), fnv1a(s), f}));
          set.context = {user, static_cast<int>(f), s, s, pipeline_id};
          out.score_sets.push_back(std::move(set));
        }
      }
      if (out.score_sets.size() == before) out.skips.push_back({"*", s, s, -1, "every user skipped"});
    }
    return out;
  }

  if (sessions.size() < 2)
    throw ParamError("multi-session evaluation needs at least two sessions, found " +
                     std::to_string(sessions.size()));
  for (const auto& [si, sj] : session_pairs(sessions)) {
    const auto& rows_i = by_session.at(si);
    const auto& rows_j = by_session.at(sj);
    const auto seed = derive_seed(plan.seed, {fnv1a(si)});
    const auto before = out.score_sets.size();
    const auto probe_subjects = unique_in_order(subjects, rows_j);
    const std::set<std::string> in_j(probe_subjects.begin(), probe_subjects.end());
    for (const auto& user : unique_in_order(subjects, rows_i)) {
      if (!in_j.count(user)) {
        out.skips.push_back({user, si, sj, -1, "user absent from probe session"});
        continue;
      }
      std::vector<Fold> folds;
      try {
        folds = make_folds(rows_i, user, seed);
      } catch (const SkipUser& e) {
        out.skips.push_back({user, si, sj, -1, e.what()});
        continue;
      }
      Rows gen_j, imp_j;
      for (auto r : rows_j) (subjects[r] == user ? gen_j : imp_j).push_back(r);
      auto rng = make_rng(plan.seed, {fnv1a(user), fnv1a(si), fnv1a(sj), fnv1a("probe")});
      const auto gparts = deal(gen_j, k, rng);
      std::vector<Rows> iparts(static_cast<std::size_t>(k));
      if (plan.attacker == Attacker::Known) {
        iparts = deal(imp_j, k, rng);
      } else {
        // Same impostor groups as the enrollment-session folds.
        std::vector<std::string> others;
        for (auto r : rows_i)
          if (subjects[r] != user) others.push_back(subjects[r]);
        const auto groups = group_map(group_subjects(others, k, group_seed(seed, user)));
        for (auto r : imp_j) {
          const auto it = groups.find(subjects[r]);
          if (it != groups.end()) iparts[static_cast<std::size_t>(it->second)].push_back(r);
        }
      }
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& genuine = gparts[f];
        const auto& impostor = iparts[f];
        if (genuine.empty() || impostor.empty() || !has_both(subjects, folds[f].train, user)) {
          out.skips.push_back({user, si, sj, static_cast<int>(f), "fold lacks a class"});
          continue;
        }
        auto set = score_fold(fm, spec, folds[f].train, genuine, impostor, user,
                              derive_seed(plan.seed, {fnv1a(user), fnv1a(si), fnv1a(sj), f}));
        set.context = {user, static_cast<int>(f), si, sj, pipeline_id};
        out.score_sets.push_back(std::move(set));
      }
    }
    if (out.score_sets.size() == before) out.skips.push_back({"*", si, sj, -1, "every user skipped"});
  }
  return out;
}

namespace {

struct TwinFold {
  EmbeddingModel model;
  Rows train_rows;
  Rows held_out;  // epochs of embedding-train subjects kept out of training
  std::map<std::string, int> groups;
};

TwinFold train_twin_fold(const EpochSet& epochs, const TwinConfig& config, const EvalPlan& plan,
                         const std::string& session, const Rows& rows, int fold) {
  const auto& subjects = epochs.subject_ids;
  TwinFold tf;
  tf.groups = group_map(group_subjects(unique_in_order(subjects, rows), plan.k_folds,
                                       derive_seed(plan.seed, {fnv1a("twin-outer"), fnv1a(session)})));
  std::map<std::string, Rows> per_subject;
  for (auto r : rows)
    if (tf.groups.at(subjects[r]) != fold) per_subject[subjects[r]].push_back(r);
  if (per_subject.size() < 2)
    throw TrainingError("TwinNeuralNetwork: fewer than two embedding-training subjects in " + session);
  for (const auto& [subject, srows] : per_subject) {
    auto rng = make_rng(plan.seed, {fnv1a(subject), fnv1a(session), fnv1a("twin-holdout")});
    const auto parts = deal(srows, plan.k_folds, rng);
    for (std::size_t p = 0; p < parts.size(); ++p)
      (p == 0 ? tf.held_out : tf.train_rows).insert(
          p == 0 ? tf.held_out.end() : tf.train_rows.end(), parts[p].begin(), parts[p].end());
  }
  std::sort(tf.train_rows.begin(), tf.train_rows.end());
  std::sort(tf.held_out.begin(), tf.held_out.end());
  TwinConfig cfg = config;
  cfg.seed = derive_seed(config.seed, {fnv1a(session), static_cast<std::uint64_t>(fold)});
  auto model = EmbeddingModel::build(cfg, static_cast<int>(epochs.n_channels),
                                     static_cast<int>(epochs.n_times));
  tf.model = train(std::move(model), epochs.select(tf.train_rows), cfg);
  return tf;
}

}  // namespace

EvalOutput evaluate_twin(const EpochSet& epochs, const TwinConfig& config, const EvalPlan& plan,
                         const std::string& pipeline_id) {
  validate(plan);
  validate(config);
  EvalOutput out;
  const auto& subjects = epochs.subject_ids;
  const auto sessions = ordered_sessions(epochs.session_ids, epochs.session_order);
  const auto by_session = rows_by_session(epochs.session_ids);
  const int k = plan.k_folds;

  std::vector<std::pair<std::string, std::string>> pairs;
  if (plan.scheme == Scheme::SingleSession) {
    for (const auto& s : sessions) pairs.emplace_back(s, s);
  } else {
    if (sessions.size() < 2)
      throw ParamError("multi-session evaluation needs at least two sessions, found " +
                       std::to_string(sessions.size()));
    pairs = session_pairs(sessions);
  }

  std::map<std::pair<std::string, int>, TwinFold> cache;
  for (const auto& [si, sj] : pairs) {
    const auto& rows_i = by_session.at(si);
    const auto& rows_j = by_session.at(sj);
    const auto subjects_i = unique_in_order(subjects, rows_i);
    if (static_cast<int>(subjects_i.size()) < k)
      throw ParamError("TwinNeuralNetwork: session " + si + " has " +
                       std::to_string(subjects_i.size()) + " subjects, fewer than k_folds");
    const auto before = out.score_sets.size();
    for (int f = 0; f < k; ++f) {
      auto it = cache.find({si, f});
      if (it == cache.end())
        it = cache.emplace(std::pair{si, f}, train_twin_fold(epochs, config, plan, si, rows_i, f)).first;
      const TwinFold& tf = it->second;

      // Probe-session rows by role.
      std::map<std::string, Rows> eval_rows_i, eval_rows_j;
      Rows train_subject_probes;
      for (auto r : rows_i)
        if (tf.groups.at(subjects[r]) == f) eval_rows_i[subjects[r]].push_back(r);
      for (auto r : rows_j) {
        const auto g = tf.groups.find(subjects[r]);
        if (g != tf.groups.end() && g->second == f)
          eval_rows_j[subjects[r]].push_back(r);
        else if (plan.scheme == Scheme::MultiSession)
          train_subject_probes.push_back(r);
      }
      if (plan.scheme == Scheme::SingleSession) train_subject_probes = tf.held_out;

      std::unordered_map<std::size_t, Eigen::Index> pos;
      Rows to_embed;
      const auto want = [&](std::size_t r) {
        if (pos.emplace(r, static_cast<Eigen::Index>(to_embed.size())).second) to_embed.push_back(r);
      };
      for (const auto& [_, rs] : eval_rows_i) for (auto r : rs) want(r);
      for (const auto& [_, rs] : eval_rows_j) for (auto r : rs) want(r);
      if (plan.attacker == Attacker::Known) for (auto r : train_subject_probes) want(r);
      const Eigen::MatrixXd E = tf.model.embed(epochs, to_embed);
      const auto gather = [&](const Rows& rs) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rs.size()), E.cols());
        for (std::size_t i = 0; i < rs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = E.row(pos.at(rs[i]));
        return m;
      };

      for (const auto& user : subjects_i) {
        if (tf.groups.at(user) != f) continue;
        const auto& own_i = eval_rows_i[user];
        if (static_cast<int>(own_i.size()) < plan.min_samples_per_user) {
          out.skips.push_back({user, si, sj, -1,
                               "user " + user + " has " + std::to_string(own_i.size()) +
                                   " samples, fewer than " +
                                   std::to_string(plan.min_samples_per_user)});
          continue;
        }
        if (!eval_rows_j.count(user)) {
          out.skips.push_back({user, si, sj, -1, "user absent from probe session"});
          continue;
        }
        Rows impostor;
        for (const auto& [other, rs] : eval_rows_j)
          if (other != user) impostor = merged(impostor, rs);
        if (plan.attacker == Attacker::Known) impostor = merged(impostor, train_subject_probes);

        auto rng = make_rng(plan.seed, {fnv1a(user), fnv1a(si), fnv1a(sj), fnv1a("twin-inner")});
        const auto enroll_parts = deal(own_i, k, rng);
        const auto probe_parts = si == sj ? enroll_parts : deal(eval_rows_j.at(user), k, rng);
        for (int g = 0; g < k; ++g) {
          Rows enroll;
          for (int h = 0; h < k; ++h)
            if (h != g) enroll = merged(enroll, enroll_parts[static_cast<std::size_t>(h)]);
          const auto& genuine = probe_parts[static_cast<std::size_t>(g)];
          if (genuine.empty() || impostor.empty() || enroll.empty()) {
            out.skips.push_back({user, si, sj, g, "fold lacks enrollment or probes"});
            continue;
          }
          const auto tmpl = enrollment_template(gather(enroll));
          ScoreSet set;
          set.genuine = cosine_scores(tmpl, gather(genuine));
          set.impostor = cosine_scores(tmpl, gather(impostor));
          set.fit_rows = merged(tf.train_rows, enroll);
          set.genuine_rows = genuine;
          set.impostor_rows = impostor;
          set.context = {user, g, si, sj, pipeline_id};
          out.score_sets.push_back(std::move(set));
        }
      }
    }
    if (out.score_sets.size() == before) out.skips.push_back({"*", si, sj, -1, "every user skipped"});
  }
  return out;
}

}  // namespace neuroid
