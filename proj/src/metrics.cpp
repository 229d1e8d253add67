#include "neuroid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "neuroid/error.hpp"

namespace neuroid {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_scores(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw EmptyError("roc: genuine and impostor score vectors must be nonempty");
  auto finite = [](double v) { return !std::isnan(v); };
  if (!std::all_of(genuine.begin(), genuine.end(), finite) ||
      !std::all_of(impostor.begin(), impostor.end(), finite))
    throw ValidationError("scores", "NaN score");
}

}  // namespace

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor) {
  check_scores(genuine, impostor);

  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> unique;
  unique.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(unique));
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  const double n_gen = static_cast<double>(gen.size());
  const double n_imp = static_cast<double>(imp.size());

  RocCurve curve;
  curve.thresholds.reserve(unique.size() + 2);
  curve.fmr.reserve(unique.size() + 2);
  curve.fnmr.reserve(unique.size() + 2);

  curve.thresholds.push_back(kInf);
  curve.fmr.push_back(0.0);
  curve.fnmr.push_back(1.0);

  // Walk thresholds from high to low with two cursors into the sorted vectors.
  // At threshold t: accepted impostors = #imp >= t, rejected genuine = #gen < t.
  auto g = gen.size();  // gen[g..] >= t
  auto i = imp.size();
  for (auto it = unique.rbegin(); it != unique.rend(); ++it) {
    const double t = *it;
    while (g > 0 && gen[g - 1] >= t) --g;
    while (i > 0 && imp[i - 1] >= t) --i;
    curve.thresholds.push_back(t);
    curve.fmr.push_back(static_cast<double>(imp.size() - i) / n_imp);
    curve.fnmr.push_back(static_cast<double>(g) / n_gen);
  }

  curve.thresholds.push_back(-kInf);
  curve.fmr.push_back(1.0);
  curve.fnmr.push_back(0.0);
  return curve;
}

double eer(const RocCurve& curve) {
  if (curve.size() < 2) throw EmptyError("eer: ROC curve has fewer than two points");
  // Ascending thresholds: fmr - fnmr starts at +1 (t = -inf) and ends at -1.
  const auto n = curve.size();
  double prev_diff = curve.fmr[n - 1] - curve.fnmr[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    const double diff = curve.fmr[k] - curve.fnmr[k];
    if (diff == 0.0) return curve.fmr[k];
    if (diff < 0.0) {
      const double lambda = prev_diff / (prev_diff - diff);
      const double a = curve.fmr[k + 1];
      const double b = curve.fmr[k];
      return a + lambda * (b - a);
    }
    prev_diff = diff;
  }
  return curve.fmr.front();
}

double eer(std::span<const double> genuine, std::span<const double> impostor) {
  return eer(roc(genuine, impostor));
}

FnmrAtFmr fnmr_at_fmr(const RocCurve& curve, std::size_t n_impostor, double level) {
  if (curve.size() < 2) throw EmptyError("fnmr_at_fmr: ROC curve has fewer than two points");
  if (!(level > 0.0 && level < 1.0)) throw ParamError("fnmr_at_fmr: level must lie in (0, 1)");
  FnmrAtFmr out;
  out.resolution_warning = static_cast<double>(n_impostor) < 1.0 / level - 1e-9;
  // Smallest threshold whose fmr is within the level; the +inf sentinel
  // (fmr = 0, fnmr = 1) guarantees a hit.
  for (std::size_t k = curve.size(); k-- > 0;) {
    if (curve.fmr[k] <= level) {
      out.value = curve.fnmr[k];
      return out;
    }
  }
  out.value = 1.0;
  return out;
}

FnmrAtFmr fnmr_at_fmr(std::span<const double> genuine, std::span<const double> impostor,
                      double level) {
  return fnmr_at_fmr(roc(genuine, impostor), impostor.size(), level);
}

MetricsReport evaluate(const ScoreSet& scores) {
  const auto curve = roc(scores.genuine, scores.impostor);
  MetricsReport report;
  report.eer = eer(curve);
  for (std::size_t l = 0; l < kFmrLevels.size(); ++l)
    report.fnmr[l] = fnmr_at_fmr(curve, scores.impostor.size(), kFmrLevels[l]);
  report.n_genuine = scores.genuine.size();
  report.n_impostor = scores.impostor.size();
  report.context = scores.context;
  return report;
}

std::vector<SummaryRow> aggregate(std::span<const MetricsReport> reports,
                                  const std::function<std::string(const MetricsReport&)>& key_of) {
  if (reports.empty()) throw EmptyError("aggregate: no reports");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) {
    auto key = key_of(r);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };

  std::vector<SummaryRow> rows;
  rows.reserve(order.size());
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    SummaryRow row;
    row.key = key;
    row.count = members.size();

    std::vector<double> values(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) values[m] = members[m]->eer;
    std::tie(row.eer_mean, row.eer_std) = mean_std(values);

    for (std::size_t l = 0; l < kFmrLevels.size(); ++l) {
      for (std::size_t m = 0; m < members.size(); ++m) {
        values[m] = members[m]->fnmr[l].value;
        row.any_warning[l] = row.any_warning[l] || members[m]->fnmr[l].resolution_warning;
      }
      std::tie(row.fnmr_mean[l], row.fnmr_std[l]) = mean_std(values);
    }
    for (const auto* m : members) {
      row.n_genuine += m->n_genuine;
      row.n_impostor += m->n_impostor;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace neuroid
