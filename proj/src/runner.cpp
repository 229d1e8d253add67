#include "neuroid/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <thread>

#include "neuroid/bundle_io.hpp"
#include "neuroid/error.hpp"
#include "neuroid/features.hpp"
#include "neuroid/synthgen.hpp"

namespace neuroid {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn(0..n-1) on up to `jobs` threads. Each index is handled exactly once;
// results must be written to per-index slots.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

void add_recording(PreparedDataset& out, std::vector<EpochSet>& parts, const RawRecording& rec) {
  PreprocessStats stats;
  auto result = preprocess_recording(rec, out.params, stats);
  out.stats.n_events += stats.n_events;
  out.stats.skipped += stats.skipped;
  out.stats.rejected += stats.rejected;
  out.stats.kept += stats.kept;
  if (result.epochs.n_epochs == 0) {
    out.notes.push_back(rec.subject_id + "/" + rec.session_id + ": no epochs left after " +
                        (stats.rejected ? "rejection" : "extraction"));
    return;
  }
  parts.push_back(std::move(result.epochs));
}

std::size_t kept_subjects(const DatasetConfig& config, const DatasetManifest& manifest) {
  const auto n = manifest.subjects.size();
  return config.subjects ? std::min(n, static_cast<std::size_t>(*config.subjects)) : n;
}

void run_cell(const PreparedDataset& data, const PipelineConfig& pipeline, const EvalPlan& plan,
              CellResult& cell) {
  EvalOutput out;
  if (pipeline.is_twin()) {
    out = evaluate_twin(data.epochs, *pipeline.twin, plan, pipeline.name);
  } else {
    const auto features = assemble(data.epochs, pipeline.features);
    out = evaluate_shallow(features, pipeline.classifier, plan, pipeline.name);
  }
  cell.score_sets = std::move(out.score_sets);
  cell.skips = std::move(out.skips);
  cell.reports.reserve(cell.score_sets.size());
  for (const auto& s : cell.score_sets) cell.reports.push_back(evaluate(s));
  if (cell.score_sets.empty()) throw EmptyError("every user was skipped; nothing to score");
}

}  // namespace

bool RunRecord::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

std::filesystem::path resolve_bundle_path(const DatasetConfig& config) {
  if (config.dataset_path) return *config.dataset_path;
  if (const char* root = std::getenv("NEUROIDBENCH_DATA"); root && *root)
    return std::filesystem::path(root) / config.name;
  throw FormatError("dataset " + config.name +
                    ": no dataset_path given and NEUROIDBENCH_DATA is not set; export the "
                    "dataset to a bundle first");
}

PreparedDataset prepare_dataset(const DatasetConfig& config, const std::string& label) {
  PreparedDataset out;
  out.label = label;
  out.config = config;
  out.params = preprocess_params(config);

  std::vector<EpochSet> parts;
  DatasetManifest manifest;
  if (config.is_synthetic()) {
    auto synth = generate(config.synth);
    manifest = std::move(synth.manifest);
    std::set<std::string> selected;
    for (std::size_t s = 0; s < kept_subjects(config, manifest); ++s)
      selected.insert(manifest.subjects[s].subject_id);
    for (const auto& rec : synth.recordings)
      if (selected.count(rec.subject_id)) add_recording(out, parts, rec);
  } else {
    const auto bundle = read_bundle(resolve_bundle_path(config));
    manifest = bundle.manifest();
    for (std::size_t s = 0; s < kept_subjects(config, manifest); ++s)
      for (std::size_t t = 0; t < manifest.subjects[s].sessions.size(); ++t)
        add_recording(out, parts, bundle.recording(s, t));
  }
  for (std::size_t s = 0; s < kept_subjects(config, manifest); ++s)
    out.subjects.push_back(manifest.subjects[s].subject_id);
  if (parts.empty()) throw EmptyError("dataset " + label + ": no epochs survived preprocessing");
  out.epochs = concatenate(parts);
  out.epochs.session_order = manifest.session_order;
  return out;
}

std::vector<std::pair<DatasetConfig, std::string>> expand_sweeps(const BenchmarkConfig& config) {
  std::vector<std::pair<DatasetConfig, std::string>> out;
  std::set<std::string> used;
  const auto& sw = config.sweeps;
  for (const auto& base : config.datasets) {
    std::vector<std::optional<std::pair<double, double>>> intervals{std::nullopt};
    if (!sw.intervals.empty()) intervals.assign(sw.intervals.begin(), sw.intervals.end());
    std::vector<std::optional<std::optional<double>>> thresholds{std::nullopt};
    if (!sw.rejection_thresholds.empty())
      thresholds.assign(sw.rejection_thresholds.begin(), sw.rejection_thresholds.end());
    for (const auto& iv : intervals) {
      for (const auto& th : thresholds) {
        DatasetConfig d = base;
        std::string label = base.name;
        std::vector<std::string> tags;
        if (iv) {
          std::tie(d.tmin_s, d.tmax_s) = *iv;
          tags.push_back("interval=" + format_number(iv->first) + ":" + format_number(iv->second));
        }
        if (th) {
          d.rejection_threshold_uv = *th;
          tags.push_back("rejection=" + (*th ? format_number(**th) : std::string("none")));
        }
        if (!tags.empty()) {
          label += "[";
          for (std::size_t i = 0; i < tags.size(); ++i) label += (i ? ";" : "") + tags[i];
          label += "]";
        }
        const auto base_label = label;
        for (int n = 2; !used.insert(label).second; ++n) label = base_label + "#" + std::to_string(n);
        out.emplace_back(std::move(d), std::move(label));
      }
    }
  }
  return out;
}

RunRecord run(const BenchmarkConfig& config, const RunOptions& options) {
  const auto t0 = Clock::now();
  RunRecord record;
  record.config = config;
  record.jobs = std::max(1, options.jobs);

  const auto points = expand_sweeps(config);
  std::vector<std::optional<PreparedDataset>> prepared(points.size());
  std::vector<std::string> prepare_errors(points.size());
  parallel_for(points.size(), record.jobs, [&](std::size_t i) {
    try {
      prepared[i] = prepare_dataset(points[i].first, points[i].second);
    } catch (const std::exception& e) {
      prepare_errors[i] = e.what();
    }
  });

  for (std::size_t d = 0; d < points.size(); ++d) {
    for (const auto& p : config.pipelines) {
      CellResult cell;
      cell.id = "c" + std::to_string(record.cells.size()) + "_" +
                sanitize(points[d].second + "_" + p.name);
      cell.dataset = points[d].second;
      cell.pipeline = p.name;
      cell.scheme = config.evaluation.scheme;
      cell.attacker = config.evaluation.attacker;
      cell.preprocess = preprocess_params(points[d].first);
      if (prepared[d]) {
        cell.stats = prepared[d]->stats;
        cell.notes = prepared[d]->notes;
      } else {
        cell.ok = false;
        cell.error = prepare_errors[d];
      }
      record.cells.push_back(std::move(cell));
    }
  }

  const auto n_pipes = config.pipelines.size();
  parallel_for(record.cells.size(), record.jobs, [&](std::size_t i) {
    auto& cell = record.cells[i];
    if (!cell.ok) return;
    const auto tc = Clock::now();
    try {
      run_cell(*prepared[i / n_pipes], config.pipelines[i % n_pipes], config.evaluation, cell);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      cell.score_sets.clear();
      cell.reports.clear();
    }
    cell.wall_s = seconds_since(tc);
  });
  record.wall_s = seconds_since(t0);
  return record;
}

}  // namespace neuroid
