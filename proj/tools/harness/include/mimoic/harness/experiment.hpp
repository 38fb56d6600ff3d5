#pragma once

// Configuration-driven experiment runner behind the `mimoic` CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimoic/beamforming.hpp"
#include "mimoic/convergence.hpp"
#include "mimoic/network.hpp"
#include "mimoic/power_balancer.hpp"

namespace mimoic::harness {

enum class RealizationScale { desk, paper };

/// A hand-specified gain table and target vector, certified as is.
struct ToyInstance {
  Eigen::MatrixXd gains;
  Eigen::VectorXd targets;
};

struct ExperimentSpec {
  std::string scenario = "default";
  std::vector<int> tx_antennas{4, 4, 4};
  std::vector<int> rx_antennas{4, 4, 4};
  std::vector<int> streams{2, 2, 2};
  StreamTable weights;  // empty means equal weights
  std::vector<double> snr_db{10.0};
  int realizations = 1000;
  std::uint64_t seed = 1;
  double epsilon = 1e-3;
  int inner_limit = 100;
  int outer_limit = 50;
  int bf_iters = 16;
  bool ber = false;
  std::uint64_t ber_symbols = 1000;
  bool async_schedule = false;
  DeltaMinMode delta_min_mode = DeltaMinMode::weighted;
  RealizationScale scale = RealizationScale::desk;
  double target_scale = 1.0;  // multiplies the certified targets
  bool write_artifacts = true;
  std::optional<ToyInstance> toy;

  int users() const { return static_cast<int>(streams.size()); }

  /// Network at the given SNR: every user's power budget is 10^(snr/10).
  NetworkConfig network(double snr_db) const;

  /// Realizations to run at the SNR with index `snr_index`. Paper scale
  /// uses 10^3, 10^4, 10^5, 10^6 for 0, 5, 10, 15 dB.
  int realizations_at(std::size_t snr_index) const;

  BalanceOptions balance_options(std::uint64_t schedule_seed) const;

  /// Throws ConfigError on the first inconsistency.
  void validate() const;
};

/// Parses the JSON configuration. Scalar antenna/stream entries are
/// broadcast to all `users`; `weights` may be "equal", one per-stream list
/// shared by every user, or a full per-user table.
ExperimentSpec parse_spec(const nlohmann::json& json);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Everything derived for one channel realization before balancing.
struct Realization {
  std::size_t snr_index = 0;
  double snr_db = 0.0;
  long id = 0;  // 1-based within its SNR
  NetworkConfig config;
  ChannelSet channels;
  BeamformerSet beamformers;
  StreamTable initial_sinrs;  // equal split, streams ascending per user
};

/// Seed of a realization-level RNG substream: (spec seed, SNR index,
/// realization id, purpose).
enum class SeedPurpose : std::uint64_t { channel = 0, beamformer = 1, ber = 2, schedule = 3 };
std::uint64_t realization_seed(const ExperimentSpec& spec, std::size_t snr_index, long id, SeedPurpose purpose);

/// Generates the channel and the max-SINR beamformers, then orders each
/// user's streams by ascending SINR at the equal split.
Realization prepare_realization(const ExperimentSpec& spec, std::size_t snr_index, long id);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  int workers = 1;
  /// For certify: read channels and beamformers written by a previous
  /// beamform run from this directory instead of regenerating them.
  std::optional<std::filesystem::path> artifacts_dir;
};

/// Realizations that could not be processed, with their reasons.
struct RunSummary {
  long processed = 0;
  std::vector<std::string> skipped;
};

RunSummary run_beamform(const ExperimentSpec& spec, const RunOptions& options);
RunSummary run_balance(const ExperimentSpec& spec, const RunOptions& options);
RunSummary run_sweep(const ExperimentSpec& spec, const RunOptions& options);
RunSummary run_certify(const ExperimentSpec& spec, const RunOptions& options);

}  // namespace mimoic::harness
