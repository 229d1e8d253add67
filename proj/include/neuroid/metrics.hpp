#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace neuroid {

/// Where a set of scores came from.
struct ScoreContext {
  std::string user_id;
  int fold = 0;
  std::string enroll_session;
  std::string probe_session;
  std::string pipeline_id;

  bool operator==(const ScoreContext&) const = default;
};

/// Genuine and impostor match scores for one authentication scenario. Higher
/// scores mean "more likely genuine".
///
/// The row vectors record which dataset rows the model was fit on and which
/// rows produced the scores, so leakage can be checked after the fact.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
  ScoreContext context;

  std::vector<std::size_t> fit_rows;
  std::vector<std::size_t> genuine_rows;
  std::vector<std::size_t> impostor_rows;
};

/// ROC sampled at every distinct score plus the two infinite sentinels.
/// Thresholds run from +inf down to -inf; a probe is accepted iff
/// score >= threshold.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fmr;
  std::vector<double> fnmr;

  std::size_t size() const noexcept { return thresholds.size(); }
};

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor);
inline RocCurve roc(const ScoreSet& s) { return roc(s.genuine, s.impostor); }

/// Equal error rate, linearly interpolated at the fmr/fnmr crossing.
double eer(const RocCurve& curve);
double eer(std::span<const double> genuine, std::span<const double> impostor);
inline double eer(const ScoreSet& s) { return eer(s.genuine, s.impostor); }

struct FnmrAtFmr {
  double value = 1.0;
  /// Set when fewer than 1/level impostor scores exist, i.e. the level
  /// cannot be resolved by this score set.
  bool resolution_warning = false;
};

FnmrAtFmr fnmr_at_fmr(const RocCurve& curve, std::size_t n_impostor, double level);
FnmrAtFmr fnmr_at_fmr(std::span<const double> genuine, std::span<const double> impostor,
                      double level);

/// The three operating points reported everywhere: 1%, 0.1%, 0.01% FMR.
inline constexpr std::array<double, 3> kFmrLevels{1e-2, 1e-3, 1e-4};

struct MetricsReport {
  double eer = 0.0;
  std::array<FnmrAtFmr, kFmrLevels.size()> fnmr{};
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
  ScoreContext context;
};

MetricsReport evaluate(const ScoreSet& scores);

/// Mean / standard deviation of the headline numbers over a group of reports.
struct SummaryRow {
  std::string key;
  std::size_t count = 0;
  double eer_mean = 0.0;
  double eer_std = 0.0;
  std::array<double, kFmrLevels.size()> fnmr_mean{};
  std::array<double, kFmrLevels.size()> fnmr_std{};
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
  std::array<bool, kFmrLevels.size()> any_warning{};
};

/// Groups reports by `key_of` (first-appearance order) and averages each
/// group. Standard deviations are population (divide by count).
std::vector<SummaryRow> aggregate(std::span<const MetricsReport> reports,
                                  const std::function<std::string(const MetricsReport&)>& key_of);

}  // namespace neuroid
