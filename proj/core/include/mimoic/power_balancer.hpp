#pragma once

// Weighted substream SINR balancing with fixed beamformers.
//
// The inner loop is a capped, per-user ordered version of the Yates power
// update p <- Gamma * delta(p). The outer loop is a linear search on the
// per-user SINR budget: targets are reset from the SINRs the inner loop
// actually achieved until every user's weighted substream SINRs agree.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mimoic/network.hpp"

namespace mimoic {

/// v^H B v / v^H R' v for substream (k, l), i.e. p_{k,l} / SINR_{k,l} without
/// dependence on p_{k,l}. Throws DegenerateStreamError when v^H R' v == 0.
double delta(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k, int l);

StreamTable deltas(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw);

/// Uncapped update Gamma_{k,l} * delta_{k,l}.
StreamTable interference_function(const StreamTable& deltas, const StreamTable& targets);

/// One user's capped update. Substreams are visited in ascending delta order
/// (ties by lower index); each receives min(Gamma * delta, remaining budget).
/// The returned powers never sum to more than `budget`.
std::vector<double> inner_power_step(std::span<const double> deltas, std::span<const double> targets, double budget);

struct TargetState {
  StreamTable targets;             // Gamma_{k,l}
  std::vector<double> common;      // Gamma_k^C, so Gamma_{k,l} = beta_{k,l} * Gamma_k^C
  StreamTable normalized_weights;  // beta_{k,l} / sum_l beta_{k,l}
};

/// Gamma_{k,l} = beta^N_{k,l} * sum_l SINR_{k,l}.
TargetState update_targets(const StreamTable& sinrs, const StreamTable& weights);

/// Which minimum enters the per-user gap: weighted SINR/beta, or raw SINR.
enum class DeltaMinMode { weighted, raw };

struct FairnessGap {
  std::vector<double> per_user;
  double total = 0.0;
};

/// Delta_k = mean_l(SINR_{k,l} / beta_{k,l}) - min(...), floored at 0.
FairnessGap fairness_gap(const StreamTable& sinrs, const StreamTable& weights,
                         DeltaMinMode mode = DeltaMinMode::weighted);

enum class Schedule {
  synchronous,   // every user updates from the previous sweep's powers
  asynchronous,  // users update one at a time in a seeded random order
};

struct InnerLoopOptions {
  Schedule schedule = Schedule::synchronous;
  std::uint64_t schedule_seed = 0;
  bool record_trace = false;
};

struct InnerLoopResult {
  PowerAllocation powers;
  int iterations = 0;
  /// Flat power vectors p^0, p^1, ... when record_trace is set.
  std::vector<Eigen::VectorXd> trace;
};

/// Repeats inner_power_step for every user until the summed l1 change of
/// the powers is at most config.epsilon or config.inner_limit sweeps ran.
/// Starts from the equal split p_k / d_k.
InnerLoopResult run_inner_loop(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets,
                               const NetworkConfig& config, const InnerLoopOptions& options = {});

/// Same, from an explicit starting allocation.
InnerLoopResult run_inner_loop(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets,
                               const NetworkConfig& config, PowerAllocation start,
                               const InnerLoopOptions& options = {});

struct BalanceOptions {
  int outer_limit = 50;
  DeltaMinMode delta_min_mode = DeltaMinMode::weighted;
  InnerLoopOptions inner;
};

/// What one round of power control achieved for a given set of targets.
struct AchievedSinrs {
  StreamTable sinrs;
  int inner_iterations = 0;
};

using TargetEvaluator = std::function<AchievedSinrs(const TargetState&)>;

struct SearchStep {
  TargetState targets;
  StreamTable sinrs;
  FairnessGap gap;
  int inner_iterations = 0;
};

struct SearchResult {
  std::vector<SearchStep> steps;
  bool converged = false;
  double fairness_gap = 0.0;
};

/// The outer loop on its own: targets from the current SINRs, evaluate,
/// stop once the total gap is at most epsilon or after outer_limit rounds.
/// Always runs at least one round.
SearchResult linear_search(const StreamTable& initial_sinrs, const StreamTable& weights, double epsilon,
                           const BalanceOptions& options, const TargetEvaluator& evaluate);

struct BalanceResult {
  PowerAllocation powers;
  StreamTable initial_sinrs;
  std::vector<SearchStep> steps;
  std::vector<PowerAllocation> power_trace;  // final powers of each outer round
  bool converged = false;
  int outer_iters = 0;
  int inner_iters_total = 0;
  double fairness_gap = 0.0;

  const StreamTable& final_sinrs() const { return steps.empty() ? initial_sinrs : steps.back().sinrs; }
};

/// Full ad-hoc balancing with the beamformers held fixed. Initial SINRs are
/// evaluated at the equal power split. Never throws for non-convergence; the
/// result is flagged instead.
BalanceResult balance(const ChannelSet& channels, const BeamformerSet& bf, const NetworkConfig& config,
                      const BalanceOptions& options = {});

}  // namespace mimoic
