// mimoic: weighted substream SINR balancing experiments.
//
//   mimoic <beamform|balance|sweep|certify> --config PATH [--out DIR] ...
//
// Exit status: 0 success, 2 configuration error, 3 I/O error, 1 otherwise.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mimoic/harness/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  bool async_schedule = false;
  std::optional<std::string> delta_min_mode;
  std::optional<std::string> scale;
  int workers = 0;
  std::optional<std::string> artifacts;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment configuration (JSON)")->required();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Override the configured seed");
  cmd->add_option("--realizations", o.realizations, "Override realizations per SNR")->check(CLI::PositiveNumber);
  cmd->add_flag("--async-schedule", o.async_schedule, "Update users one at a time in seeded random order");
  cmd->add_option("--delta-min-mode", o.delta_min_mode, "Minimum used in the fairness gap")
      ->check(CLI::IsMember({"weighted", "raw"}));
  cmd->add_option("--scale", o.scale, "Realization counts: desk (configured) or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
}

mimoic::harness::ExperimentSpec resolve(const Overrides& o) {
  using namespace mimoic::harness;
  ExperimentSpec spec = load_spec(o.config);
  if (o.seed) spec.seed = *o.seed;
  if (o.realizations) spec.realizations = *o.realizations;
  if (o.async_schedule) spec.async_schedule = true;
  if (o.delta_min_mode) {
    spec.delta_min_mode = *o.delta_min_mode == "raw" ? mimoic::DeltaMinMode::raw : mimoic::DeltaMinMode::weighted;
  }
  if (o.scale) spec.scale = *o.scale == "paper" ? RealizationScale::paper : RealizationScale::desk;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted substream SINR balancing in MIMO interference channels"};
  app.require_subcommand(1);
  Overrides o;
  auto* beamform = app.add_subcommand("beamform", "Generate channels and max-SINR beamformers");
  auto* balance = app.add_subcommand("balance", "Run the ad-hoc balancing algorithm per realization");
  auto* sweep = app.add_subcommand("sweep", "Aggregate SINR, sum-rate and BER over an SNR list");
  auto* certify = app.add_subcommand("certify", "Contraction and spectral-radius certificates");
  for (auto* cmd : {beamform, balance, sweep, certify}) add_common(cmd, o);
  certify->add_option("--artifacts", o.artifacts, "Directory of channels/beamformers written by beamform");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    using namespace mimoic::harness;
    const ExperimentSpec spec = resolve(o);
    RunOptions options;
    options.out_dir = o.out;
    options.workers = o.workers > 0 ? o.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (o.artifacts) options.artifacts_dir = *o.artifacts;

    RunSummary summary;
    if (beamform->parsed()) {
      summary = run_beamform(spec, options);
    } else if (balance->parsed()) {
      summary = run_balance(spec, options);
    } else if (sweep->parsed()) {
      summary = run_sweep(spec, options);
    } else {
      summary = run_certify(spec, options);
    }
    std::cerr << "processed " << summary.processed << " realization(s), skipped " << summary.skipped.size() << '\n';
  } catch (const mimoic::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mimoic::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
