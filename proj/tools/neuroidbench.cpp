#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "neuroid/bundle_io.hpp"
#include "neuroid/config.hpp"
#include "neuroid/error.hpp"
#include "neuroid/report.hpp"
#include "neuroid/runner.hpp"
#include "neuroid/synthgen.hpp"

namespace {

constexpr int kExitCellFailed = 1;
constexpr int kExitUsage = 2;

struct RunArgs {
  std::string config;
  std::string output = "results";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string evaluation;
  std::string attacker;
};

int do_run(const RunArgs& a) {
  auto config = neuroid::load_config(a.config);
  if (a.seed) config.evaluation.seed = *a.seed;
  if (!a.evaluation.empty()) config.evaluation.scheme = neuroid::scheme_from_string(a.evaluation);
  if (!a.attacker.empty()) config.evaluation.attacker = neuroid::attacker_from_string(a.attacker);

  const auto record = neuroid::run(config, {a.jobs});
  neuroid::emit_reports(record, a.output);
  for (const auto& cell : record.cells) {
    if (cell.ok)
      std::fprintf(stderr, "ok      %s / %s: %zu score sets, %zu skips (%.1f s)\n",
                   cell.dataset.c_str(), cell.pipeline.c_str(), cell.score_sets.size(),
                   cell.skips.size(), cell.wall_s);
    else
      std::fprintf(stderr, "FAILED  %s / %s: %s\n", cell.dataset.c_str(), cell.pipeline.c_str(),
                   cell.error.c_str());
  }
  std::fprintf(stderr, "reports written to %s\n", a.output.c_str());
  return record.all_ok() ? 0 : kExitCellFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG (ERP) brainwave authentication benchmark"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run every dataset x pipeline cell of a YAML config");
  run->add_option("--config", run_args.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--output", run_args.output, "Report directory")->capture_default_str();
  run->add_option("--seed", run_args.seed, "Override evaluation.seed");
  run->add_option("--jobs", run_args.jobs, "Cells evaluated in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--evaluation", run_args.evaluation, "Override evaluation.scheme")
      ->check(CLI::IsMember({"single", "multi"}));
  run->add_option("--attacker", run_args.attacker, "Override evaluation.attacker")
      ->check(CLI::IsMember({"known", "unknown"}));

  std::string check_config;
  auto* check = app.add_subcommand("check", "Parse a config and print it with defaults filled in");
  check->add_option("--config", check_config, "YAML configuration file")->required()->check(CLI::ExistingFile);

  neuroid::SynthConfig synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("synth", "Write a synthetic dataset as an epoch bundle");
  gen->add_option("--out", synth_out, "Bundle directory")->required();
  gen->add_option("--subjects", synth.n_subjects)->capture_default_str();
  gen->add_option("--sessions", synth.n_sessions)->capture_default_str();
  gen->add_option("--epochs", synth.epochs_per_session, "Epochs per session")->capture_default_str();
  gen->add_option("--rate", synth.sampling_rate_hz, "Sampling rate (Hz)")->capture_default_str();
  gen->add_option("--channels", synth.n_channels)->capture_default_str();
  gen->add_option("--separability", synth.subject_separability)->capture_default_str();
  gen->add_option("--drift", synth.session_drift)->capture_default_str();
  gen->add_option("--noise", synth.noise_std_uv, "Background noise std (uV)")->capture_default_str();
  gen->add_option("--artifact-rate", synth.artifact_rate)->capture_default_str();
  gen->add_option("--seed", synth.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(run_args);
    if (*check) {
      std::cout << neuroid::emit_config(neuroid::load_config(check_config));
      return 0;
    }
    if (*gen) {
      const auto data = neuroid::generate(synth);
      neuroid::write_bundle(data.manifest, data.recordings, synth_out);
      std::fprintf(stderr, "wrote %zu recordings to %s\n", data.recordings.size(), synth_out.c_str());
      return 0;
    }
  } catch (const neuroid::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const neuroid::ParamError& e) {
    std::fprintf(stderr, "parameter error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCellFailed;
  }
  return 0;
}
