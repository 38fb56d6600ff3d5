#include "mimoic/power_balancer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mimoic/beamforming.hpp"
#include "mimoic/random.hpp"

namespace mimoic {

namespace {

std::string stream_tag(int k, int l) { return "(" + std::to_string(k + 1) + ", " + std::to_string(l + 1) + ")"; }

// Interference is accumulated from nonnegative coupling terms
// p_{j,s} |v^H H_kj u_{j,s}|^2, so the result is monotone in every power even
// after rounding.
std::vector<double> user_deltas(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k) {
  const auto kk = static_cast<std::size_t>(k);
  const CMatrix& v = bf.receive[kk];
  const auto d = v.cols();
  std::vector<double> interference(static_cast<std::size_t>(d), 0.0);
  std::vector<double> signal(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < channels.users(); ++j) {
    const Eigen::MatrixXd gains =
        (v.adjoint() * channels(k, j) * bf.transmit[static_cast<std::size_t>(j)]).cwiseAbs2();
    for (Eigen::Index l = 0; l < d; ++l) {
      for (Eigen::Index s = 0; s < gains.cols(); ++s) {
        if (j == k && s == l) {
          signal[static_cast<std::size_t>(l)] = gains(l, s);
        } else {
          interference[static_cast<std::size_t>(l)] += pw(j, static_cast<int>(s)) * gains(l, s);
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(d));
  for (Eigen::Index l = 0; l < d; ++l) {
    const auto ll = static_cast<std::size_t>(l);
    if (!(signal[ll] > 0.0)) throw DegenerateStreamError("desired signal of stream " + stream_tag(k, static_cast<int>(l)) + " is nulled");
    out[ll] = (interference[ll] + v.col(l).squaredNorm()) / signal[ll];
  }
  return out;
}

void check_table_shape(const StreamTable& table, const NetworkConfig& config, const char* what) {
  if (table.size() != static_cast<std::size_t>(config.users())) throw ConfigError(std::string(what) + ": wrong user count");
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].size() != static_cast<std::size_t>(config.streams[k])) {
      throw ConfigError(std::string(what) + ": wrong stream count for user " + std::to_string(k + 1));
    }
  }
}

}  // namespace

double delta(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k, int l) {
  const CVector v = bf.receive[static_cast<std::size_t>(k)].col(l);
  const auto cov = covariances(channels, bf, pw, k, l);
  const double signal = (v.adjoint() * cov.unit_signal * v)(0, 0).real();
  if (!(signal > 0.0)) throw DegenerateStreamError("desired signal of stream " + stream_tag(k, l) + " is nulled");
  return (v.adjoint() * cov.interference_noise * v)(0, 0).real() / signal;
}

StreamTable deltas(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw) {
  StreamTable out;
  for (int k = 0; k < channels.users(); ++k) out.push_back(user_deltas(channels, bf, pw, k));
  return out;
}

StreamTable interference_function(const StreamTable& deltas, const StreamTable& targets) {
  if (deltas.size() != targets.size()) throw ConfigError("delta and target tables differ in shape");
  StreamTable out(deltas.size());
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (deltas[k].size() != targets[k].size()) throw ConfigError("delta and target tables differ in shape");
    out[k].resize(deltas[k].size());
    for (std::size_t l = 0; l < deltas[k].size(); ++l) out[k][l] = targets[k][l] * deltas[k][l];
  }
  return out;
}

std::vector<double> inner_power_step(std::span<const double> deltas, std::span<const double> targets, double budget) {
  if (deltas.size() != targets.size()) throw ConfigError("delta and target vectors differ in length");
  const std::size_t n = deltas.size();
  std::vector<double> powers(n, 0.0);
  // A processed mask plays the role of overwriting visited deltas with a
  // sentinel larger than every remaining one.
  std::vector<bool> done(n, false);
  double total = 0.0;
  std::size_t binding = n;
  for (std::size_t counter = 0; counter < n; ++counter) {
    std::size_t y = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (y == n || deltas[i] < deltas[y])) y = i;
    }
    const double wanted = targets[y] * deltas[y];
    const double remaining = std::max(budget - total, 0.0);
    if (wanted >= remaining && binding == n) binding = y;
    powers[y] = std::min(wanted, remaining);
    total += powers[y];
    done[y] = true;
  }
  // Rounding in the running total may overshoot by an ulp; trim the stream
  // that received the residual.
  if (binding < n) {
    auto sum = [&] { return std::accumulate(powers.begin(), powers.end(), 0.0); };
    while (sum() > budget && powers[binding] > 0.0) powers[binding] = std::nextafter(powers[binding], 0.0);
  }
  return powers;
}

TargetState update_targets(const StreamTable& sinrs, const StreamTable& weights) {
  if (sinrs.size() != weights.size()) throw ConfigError("SINR and weight tables differ in shape");
  TargetState out;
  for (std::size_t k = 0; k < sinrs.size(); ++k) {
    if (sinrs[k].size() != weights[k].size() || sinrs[k].empty()) {
      throw ConfigError("SINR and weight tables differ in shape");
    }
    const double budget = std::accumulate(sinrs[k].begin(), sinrs[k].end(), 0.0);
    const double weight_sum = std::accumulate(weights[k].begin(), weights[k].end(), 0.0);
    if (!(budget > 0.0)) {
      throw DegenerateStreamError("user " + std::to_string(k + 1) + " has no SINR left to distribute");
    }
    std::vector<double> normalized(weights[k].size());
    std::vector<double> targets(weights[k].size());
    for (std::size_t l = 0; l < weights[k].size(); ++l) {
      normalized[l] = weights[k][l] / weight_sum;
      targets[l] = normalized[l] * budget;
    }
    out.common.push_back(budget / weight_sum);
    out.normalized_weights.push_back(std::move(normalized));
    out.targets.push_back(std::move(targets));
  }
  return out;
}

FairnessGap fairness_gap(const StreamTable& sinrs, const StreamTable& weights, DeltaMinMode mode) {
  if (sinrs.size() != weights.size()) throw ConfigError("SINR and weight tables differ in shape");
  FairnessGap out;
  for (std::size_t k = 0; k < sinrs.size(); ++k) {
    if (sinrs[k].size() != weights[k].size() || sinrs[k].empty()) {
      throw ConfigError("SINR and weight tables differ in shape");
    }
    double mean = 0.0;
    double weighted_min = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < sinrs[k].size(); ++l) {
      const double w = sinrs[k][l] / weights[k][l];
      mean += w;
      weighted_min = std::min(weighted_min, w);
    }
    mean /= static_cast<double>(sinrs[k].size());
    const double floor = mode == DeltaMinMode::weighted ? weighted_min
                                                        : *std::min_element(sinrs[k].begin(), sinrs[k].end());
    const double gap = std::max(mean - floor, 0.0);
    out.per_user.push_back(gap);
    out.total += gap;
  }
  return out;
}

InnerLoopResult run_inner_loop(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets,
                               const NetworkConfig& config, const InnerLoopOptions& options) {
  return run_inner_loop(channels, bf, targets, config, PowerAllocation::equal_split(config), options);
}

InnerLoopResult run_inner_loop(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets,
                               const NetworkConfig& config, PowerAllocation start, const InnerLoopOptions& options) {
  config.validate();
  check_table_shape(targets, config, "targets");
  const int k_users = config.users();

  InnerLoopResult out{std::move(start), 0, {}};
  PowerAllocation& p = out.powers;
  if (options.record_trace) out.trace.push_back(p.flat());

  std::vector<int> order(static_cast<std::size_t>(k_users));
  std::iota(order.begin(), order.end(), 0);

  double change = 0.0;
  do {
    const PowerAllocation previous = p;
    if (options.schedule == Schedule::synchronous) {
      const StreamTable d = deltas(channels, bf, previous);
      for (int k = 0; k < k_users; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const auto next = inner_power_step(d[kk], targets[kk], config.power_budget[kk]);
        p.set_user(k, Eigen::Map<const Eigen::VectorXd>(next.data(), static_cast<Eigen::Index>(next.size())));
      }
    } else {
      Rng rng(derive_seed(options.schedule_seed, {static_cast<std::uint64_t>(out.iterations)}));
      for (int i = k_users - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
      }
      for (int k : order) {
        const auto kk = static_cast<std::size_t>(k);
        const auto d = user_deltas(channels, bf, p, k);
        const auto next = inner_power_step(d, targets[kk], config.power_budget[kk]);
        p.set_user(k, Eigen::Map<const Eigen::VectorXd>(next.data(), static_cast<Eigen::Index>(next.size())));
      }
    }
    ++out.iterations;
    change = (p.flat() - previous.flat()).lpNorm<1>();
    if (options.record_trace) out.trace.push_back(p.flat());
  } while (change > config.epsilon && out.iterations < config.inner_limit);
  return out;
}

SearchResult linear_search(const StreamTable& initial_sinrs, const StreamTable& weights, double epsilon,
                           const BalanceOptions& options, const TargetEvaluator& evaluate) {
  if (options.outer_limit < 1) throw ConfigError("outer_limit must be >= 1");
  SearchResult out;
  StreamTable current = initial_sinrs;
  for (int m = 0; m < options.outer_limit; ++m) {
    TargetState targets = update_targets(current, weights);
    AchievedSinrs achieved = evaluate(targets);
    FairnessGap gap = fairness_gap(achieved.sinrs, weights, options.delta_min_mode);
    current = achieved.sinrs;
    out.fairness_gap = gap.total;
    out.steps.push_back({std::move(targets), std::move(achieved.sinrs), std::move(gap), achieved.inner_iterations});
    if (out.fairness_gap <= epsilon) {
      out.converged = true;
      break;
    }
  }
  return out;
}

BalanceResult balance(const ChannelSet& channels, const BeamformerSet& bf, const NetworkConfig& config,
                      const BalanceOptions& options) {
  config.validate();
  channels.check(config);
  bf.check(config);

  const PowerAllocation initial_power = PowerAllocation::equal_split(config);
  BalanceResult out{initial_power, all_sinrs(channels, bf, initial_power), {}, {}, false, 0, 0, 0.0};

  const TargetEvaluator evaluate = [&](const TargetState& targets) {
    InnerLoopResult inner = run_inner_loop(channels, bf, targets.targets, config, options.inner);
    AchievedSinrs achieved{all_sinrs(channels, bf, inner.powers), inner.iterations};
    out.power_trace.push_back(std::move(inner.powers));
    return achieved;
  };
  SearchResult search = linear_search(out.initial_sinrs, config.weights, config.epsilon, options, evaluate);

  out.steps = std::move(search.steps);
  out.converged = search.converged;
  out.fairness_gap = search.fairness_gap;
  out.outer_iters = static_cast<int>(out.steps.size());
  for (const auto& step : out.steps) out.inner_iters_total += step.inner_iterations;
  if (!out.power_trace.empty()) out.powers = out.power_trace.back();
  return out;
}

}  // namespace mimoic
