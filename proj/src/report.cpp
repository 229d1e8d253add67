#include "neuroid/report.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neuroid/error.hpp"

namespace neuroid {
namespace {

using Json = nlohmann::ordered_json;

std::string num(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

const char* level_name(std::size_t i) {
  static const char* names[] = {"1e-2", "1e-3", "1e-4"};
  return names[i];
}

template <class Flags>
std::string warn_field(const Flags& flags) {
  std::string out;
  for (std::size_t i = 0; i < kFmrLevels.size(); ++i)
    if (flags[i]) out += (out.empty() ? "" : "|") + std::string(level_name(i));
  return out.empty() ? "none" : out;
}

SummaryRow fold_mean(const CellResult& cell) {
  return aggregate(cell.reports, [](const MetricsReport&) { return std::string("all"); }).front();
}

std::string session_pair(const ScoreContext& c) { return c.enroll_session + ">" + c.probe_session; }

std::string roc_file_name(const ScoreContext& c) {
  std::string s = "roc_" + c.enroll_session + "-" + c.probe_session + "_" + c.user_id + "_f" +
                  std::to_string(c.fold) + ".csv";
  for (auto& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
      ch = '_';
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

ScoreSet pooled_scores(const CellResult& cell) {
  ScoreSet pooled;
  for (const auto& s : cell.score_sets) {
    pooled.genuine.insert(pooled.genuine.end(), s.genuine.begin(), s.genuine.end());
    pooled.impostor.insert(pooled.impostor.end(), s.impostor.begin(), s.impostor.end());
  }
  pooled.context.pipeline_id = cell.pipeline;
  return pooled;
}

Json preprocess_json(const PreprocessParams& p) {
  Json j;
  j["band_hz"] = {p.band_low_hz, p.band_high_hz};
  j["interval_s"] = {p.epoch_tmin_s, p.epoch_tmax_s};
  j["baseline_s"] = p.baseline_window_s
                        ? Json::array({p.baseline_window_s->first, p.baseline_window_s->second})
                        : Json(nullptr);
  j["rejection_threshold_uv"] = p.ptp_reject_uv ? Json(*p.ptp_reject_uv) : Json(nullptr);
  j["resample_hz"] = p.target_rate_hz ? Json(*p.target_rate_hz) : Json(nullptr);
  j["event_codes"] = p.event_codes;
  return j;
}

Json report_json(const MetricsReport& r) {
  Json j;
  j["eer"] = r.eer;
  for (std::size_t i = 0; i < kFmrLevels.size(); ++i)
    j[std::string("fnmr_fmr_") + level_name(i)] = r.fnmr[i].value;
  Json warn = Json::array();
  for (std::size_t i = 0; i < kFmrLevels.size(); ++i)
    if (r.fnmr[i].resolution_warning) warn.push_back(level_name(i));
  j["warn_resolution"] = warn;
  j["n_genuine"] = r.n_genuine;
  j["n_impostor"] = r.n_impostor;
  return j;
}

Json cell_json(const CellResult& cell) {
  Json j;
  j["id"] = cell.id;
  j["scheme"] = to_string(cell.scheme);
  j["attacker"] = to_string(cell.attacker);
  j["status"] = cell.ok ? "ok" : "failed";
  if (!cell.ok) j["error"] = cell.error;
  j["preprocess"] = preprocess_json(cell.preprocess);
  j["epochs"] = {{"events", cell.stats.n_events},
                 {"skipped_at_edges", cell.stats.skipped},
                 {"rejected", cell.stats.rejected},
                 {"kept", cell.stats.kept}};
  j["notes"] = cell.notes;
  j["n_score_sets"] = cell.score_sets.size();
  if (cell.ok && !cell.reports.empty()) {
    const auto row = fold_mean(cell);
    Json fm;
    fm["count"] = row.count;
    fm["eer_mean"] = row.eer_mean;
    fm["eer_std"] = row.eer_std;
    for (std::size_t i = 0; i < kFmrLevels.size(); ++i) {
      fm[std::string("fnmr_fmr_") + level_name(i) + "_mean"] = row.fnmr_mean[i];
      fm[std::string("fnmr_fmr_") + level_name(i) + "_std"] = row.fnmr_std[i];
    }
    j["fold_mean"] = fm;
    j["pooled"] = report_json(pooled_report(cell));
    j["roc_csv"] = "roc_" + cell.id + ".csv";
  }
  Json skips = Json::array();
  for (const auto& s : cell.skips)
    skips.push_back({{"user", s.user},
                     {"enroll_session", s.enroll_session},
                     {"probe_session", s.probe_session},
                     {"fold", s.fold},
                     {"reason", s.reason}});
  j["skips"] = skips;
  j["wall_time_s"] = cell.wall_s;
  return j;
}

}  // namespace

std::string results_csv(const RunRecord& record) {
  std::ostringstream out;
  out << kResultsHeader << '\n';
  for (const auto& cell : record.cells) {
    if (!cell.ok) continue;
    const std::string prefix = csv_field(cell.dataset) + "," + csv_field(cell.pipeline) + "," +
                               to_string(cell.scheme) + "," + to_string(cell.attacker) + ",";
    std::array<bool, kFmrLevels.size()> flags{};
    for (const auto& r : cell.reports) {
      for (std::size_t i = 0; i < kFmrLevels.size(); ++i) flags[i] = r.fnmr[i].resolution_warning;
      out << prefix << csv_field(session_pair(r.context)) << ',' << csv_field(r.context.user_id)
          << ',' << r.context.fold << ',' << num(r.eer);
      for (const auto& f : r.fnmr) out << ',' << num(f.value);
      out << ',' << r.n_genuine << ',' << r.n_impostor << ',' << warn_field(flags) << '\n';
    }
    if (cell.reports.empty()) continue;
    const auto row = fold_mean(cell);
    out << prefix << "ALL,ALL,ALL," << num(row.eer_mean);
    for (double m : row.fnmr_mean) out << ',' << num(m);
    out << ',' << row.n_genuine << ',' << row.n_impostor << ',' << warn_field(row.any_warning)
        << '\n';
  }
  return out.str();
}

MetricsReport pooled_report(const CellResult& cell) { return evaluate(pooled_scores(cell)); }

std::string summary_json(const RunRecord& record) {
  Json j;
  j["tool"] = {{"name", "neuroidbench"}, {"version", kVersion}};
  j["name"] = record.config.name;
  j["status"] = record.all_ok() ? "ok" : "failed";
  j["environment"] = {{"version", kVersion},
                      {"compiler", __VERSION__},
                      {"seed", record.config.evaluation.seed},
                      {"jobs", record.jobs},
                      {"wall_time_s", record.wall_s}};
  j["notes"] = {
      "subjects: N keeps the first N subjects in manifest order",
      "headline numbers are means over per-fold metrics; pooled numbers use every score of a cell",
      "KNN k, RF n_trees and SVM C defaults are implementation choices, listed in "
      "resolved_config"};
  j["resolved_config"] = emit_config(record.config);
  Json pipelines = Json::object();
  for (const auto& p : record.config.pipelines) pipelines[p.name] = Json::object();
  Json failures = Json::array();
  for (const auto& cell : record.cells) {
    pipelines[cell.pipeline][cell.dataset] = cell_json(cell);
    if (!cell.ok)
      failures.push_back(
          {{"dataset", cell.dataset}, {"pipeline", cell.pipeline}, {"error", cell.error}});
  }
  j["pipelines"] = pipelines;
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

std::string roc_csv(const RocCurve& curve) {
  std::ostringstream out;
  out << "threshold,fmr,fnmr\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out << num(curve.thresholds[i], "%.17g") << ',' << num(curve.fmr[i], "%.17g") << ','
        << num(curve.fnmr[i], "%.17g") << '\n';
  return out.str();
}

std::string roc_svg(const RocCurve& curve, const std::string& title) {
  constexpr double W = 480, H = 480, M = 56;
  const double plot = W - 2 * M;
  const auto px = [&](double fmr) { return M + fmr * plot; };
  const auto py = [&](double tpr) { return H - M - tpr * plot; };
  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '&': escaped += "&amp;"; break;
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '"': escaped += "&quot;"; break;
      default: escaped += c;
    }
  }
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"13\">" << escaped
      << "</text>\n"
      << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << plot << "\" height=\"" << plot
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    out << "<text x=\"" << px(v) << "\" y=\"" << H - M + 16 << "\" text-anchor=\"middle\" "
        << "font-size=\"10\">" << num(v, "%.2f") << "</text>\n"
        << "<text x=\"" << M - 6 << "\" y=\"" << py(v) + 3 << "\" text-anchor=\"end\" "
        << "font-size=\"10\">" << num(v, "%.2f") << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 16
      << "\" text-anchor=\"middle\" font-size=\"12\">FMR</text>\n"
      << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << H / 2 << ")\">1 - FNMR</text>\n"
      << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n"
      << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out << (i ? " " : "") << num(px(curve.fmr[i]), "%.2f") << ','
        << num(py(1.0 - curve.fnmr[i]), "%.2f");
  out << "\"/>\n</svg>\n";
  return out.str();
}

void emit_reports(const RunRecord& record, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "cells", ec);
  if (ec) throw IoError("cannot create " + (dir / "cells").string() + ": " + ec.message());
  for (const auto& cell : record.cells) {
    if (!cell.ok || cell.score_sets.empty()) continue;
    const auto cell_dir = dir / "cells" / cell.id;
    std::filesystem::create_directories(cell_dir, ec);
    if (ec) throw IoError("cannot create " + cell_dir.string() + ": " + ec.message());
    for (const auto& s : cell.score_sets)
      write_file(cell_dir / roc_file_name(s.context), roc_csv(roc(s)));
    const auto curve = roc(pooled_scores(cell));
    write_file(dir / ("roc_" + cell.id + ".csv"), roc_csv(curve));
    write_file(dir / ("roc_" + cell.id + ".svg"),
               roc_svg(curve, cell.pipeline + " / " + cell.dataset + " / " +
                                  to_string(cell.scheme) + " / " + to_string(cell.attacker)));
  }
  write_file(dir / "resolved_config.yml", emit_config(record.config));
  write_file(dir / "summary.json", summary_json(record));
  write_file(dir / "results.csv", results_csv(record));
}

}  // namespace neuroid
