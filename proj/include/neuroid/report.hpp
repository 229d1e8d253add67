#pragma once

#include <filesystem>
#include <string>

#include "neuroid/metrics.hpp"
#include "neuroid/runner.hpp"

namespace neuroid {

inline constexpr const char* kResultsHeader =
    "dataset,pipeline,scheme,attacker,session_pair,user,fold,eer,fnmr_fmr_1e2,fnmr_fmr_1e3,"
    "fnmr_fmr_1e4,n_genuine,n_impostor,warn_resolution";

/// One row per ScoreSet, then one fold-mean row per cell with
/// session_pair = user = fold = ALL. Failed cells contribute no rows.
std::string results_csv(const RunRecord& record);

/// Metrics over the concatenation of every score in a cell.
MetricsReport pooled_report(const CellResult& cell);

/// Resolved config, per-cell fold means / standard deviations, pooled
/// numbers, skips, failures and an environment stamp. Pipelines are keys.
std::string summary_json(const RunRecord& record);

/// `threshold,fmr,fnmr` with full precision.
std::string roc_csv(const RocCurve& curve);

/// Self-contained SVG: FMR on x, 1 - FNMR on y.
std::string roc_svg(const RocCurve& curve, const std::string& title);

/// Writes results.csv, summary.json, resolved_config.yml, a pooled
/// roc_<cell>.csv + .svg per cell, and per-ScoreSet ROC CSVs under
/// cells/<cell>/. Throws IoError when the directory cannot be written.
void emit_reports(const RunRecord& record, const std::filesystem::path& dir);

}  // namespace neuroid
