#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "instances.hpp"
#include "mimoic/beamforming.hpp"
#include "mimoic/convergence.hpp"
#include "mimoic/power_balancer.hpp"
#include "mimoic/random.hpp"

namespace mimoic {
namespace {

using testing::contractive_instance;
using testing::random_instance;

StreamTable scaled(const StreamTable& t, double s) {
  StreamTable out = t;
  for (auto& row : out) {
    for (double& x : row) x *= s;
  }
  return out;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

// Eq.-(1) style update evaluated straight from covariances: Gamma * p / SINR.
Eigen::VectorXd yates_update(const testing::Instance& inst, const StreamTable& targets, const PowerAllocation& pw) {
  const StreamTable d = deltas(inst.channels, inst.bf, pw);
  const StreamTable i = interference_function(d, targets);
  Eigen::VectorXd out(inst.config.total_streams());
  Eigen::Index at = 0;
  for (const auto& row : i) {
    for (double x : row) out[at++] = x;
  }
  return out;
}

TEST(InnerPowerStep, HandTraces) {
  const std::vector<double> gamma{4.0, 4.0};
  EXPECT_EQ(inner_power_step(std::vector<double>{1.0, 2.0}, gamma, 20.0), (std::vector<double>{4.0, 8.0}));
  EXPECT_EQ(inner_power_step(std::vector<double>{1.0, 2.0}, gamma, 10.0), (std::vector<double>{4.0, 6.0}));
  EXPECT_EQ(inner_power_step(std::vector<double>{2.0, 1.0}, gamma, 10.0), (std::vector<double>{6.0, 4.0}));
}

TEST(InnerPowerStep, TiesGoToLowerIndex) {
  const auto p = inner_power_step(std::vector<double>{1.0, 1.0}, std::vector<double>{6.0, 6.0}, 10.0);
  EXPECT_EQ(p, (std::vector<double>{6.0, 4.0}));
}

TEST(InnerPowerStep, NeverExceedsBudgetAndResidualGoesToLargestDelta) {
  Rng rng(5);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    std::vector<double> d(n);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = 0.01 + 10.0 * rng.uniform();
      g[i] = 0.1 + 20.0 * rng.uniform();
    }
    const double budget = 0.1 + 50.0 * rng.uniform();
    const auto p = inner_power_step(d, g, budget);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    ASSERT_LE(total, budget);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
    bool bound = false;
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t y = order[i];
      if (g[y] * d[y] >= budget - used) bound = true;
      if (!bound) {
        EXPECT_DOUBLE_EQ(p[y], g[y] * d[y]);
      }
      used += p[y];
    }
    const std::size_t last = order.back();
    if (bound) {
      EXPECT_NEAR(p[last], std::max(budget - used, 0.0), 1e-12 * budget);
    } else {
      EXPECT_NEAR(p[last], std::min(g[last] * d[last], budget - used), 1e-12 * budget);
    }
  }
}

TEST(Delta, ScalarCase) {
  const NetworkConfig config = NetworkConfig::symmetric(1, 1, 1, 1, 4.0);
  const ChannelSet channels(1, {CMatrix::Ones(1, 1)});
  const BeamformerSet bf{{CMatrix::Ones(1, 1)}, {CMatrix::Ones(1, 1)}};
  const auto pw = PowerAllocation::equal_split(config);
  EXPECT_DOUBLE_EQ(sinr(channels, bf, pw, 0, 0), 4.0);
  EXPECT_DOUBLE_EQ(delta(channels, bf, pw, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(deltas(channels, bf, pw)[0][0], 1.0);
}

TEST(Delta, EqualsPowerOverSinrAndIgnoresOwnPower) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(seed);
    auto pw = PowerAllocation::equal_split(inst.config);
    pw.set(0, 1, 1.0 + static_cast<double>(seed) * 0.3);
    const StreamTable fast = deltas(inst.channels, inst.bf, pw);
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 2; ++l) {
        const double d = delta(inst.channels, inst.bf, pw, k, l);
        EXPECT_NEAR(fast[k][l], d, 1e-10 * d);
        EXPECT_NEAR(pw(k, l) / sinr(inst.channels, inst.bf, pw, k, l), d, 1e-10 * d);

        auto doubled = pw;
        doubled.set(k, l, 0.0);
        doubled.set(k, l, std::min(2.0 * pw(k, l), inst.config.power_budget[k] - doubled.user_total(k)));
        EXPECT_NEAR(delta(inst.channels, inst.bf, doubled, k, l), d, 1e-10 * d);
      }
    }
  }
}

TEST(Delta, NulledSignalIsDegenerate) {
  const auto inst = random_instance(1);
  std::vector<CMatrix> blocks = inst.channels.blocks();
  blocks[0].setZero();  // H_11
  const ChannelSet nulled(3, blocks);
  const auto pw = PowerAllocation::equal_split(inst.config);
  EXPECT_THROW(delta(nulled, inst.bf, pw, 0, 0), DegenerateStreamError);
  EXPECT_THROW(deltas(nulled, inst.bf, pw), DegenerateStreamError);
}

TEST(InterferenceFunction, FixedPointAndLinearityInTargets) {
  const auto inst = random_instance(2);
  const auto pw = PowerAllocation::equal_split(inst.config);
  const StreamTable s = all_sinrs(inst.channels, inst.bf, pw);
  const StreamTable d = deltas(inst.channels, inst.bf, pw);
  const StreamTable same = interference_function(d, s);
  const StreamTable twice = interference_function(d, scaled(s, 2.0));
  for (int k = 0; k < 3; ++k) {
    for (int l = 0; l < 2; ++l) {
      EXPECT_NEAR(same[k][l], pw(k, l), 1e-10 * pw(k, l));
      EXPECT_NEAR(twice[k][l], 2.0 * pw(k, l), 2e-10 * pw(k, l));
    }
  }
}

TEST(InterferenceFunction, StandardFunctionProperties) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(500 + static_cast<std::uint64_t>(trial % 20));
    StreamTable targets(3, std::vector<double>(2));
    for (auto& row : targets) {
      for (double& x : row) x = 0.5 + 10.0 * rng.uniform();
    }
    // Budgets are irrelevant to the uncapped map; make them roomy.
    NetworkConfig roomy = inst.config;
    for (double& b : roomy.power_budget) b = 1e6;
    Eigen::VectorXd p(6);
    Eigen::VectorXd bump(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      p[i] = 100.0 * rng.uniform();
      bump[i] = 10.0 * rng.uniform();
    }
    const double alpha = 1.0 + 4.0 * rng.uniform();
    const testing::Instance big{roomy, inst.channels, inst.bf};
    const auto ip = yates_update(big, targets, PowerAllocation::from_flat(roomy, p));
    const auto ip_bump = yates_update(big, targets, PowerAllocation::from_flat(roomy, p + bump));
    const auto ip_scaled = yates_update(big, targets, PowerAllocation::from_flat(roomy, alpha * p));
    EXPECT_TRUE((ip.array() > 0.0).all());
    EXPECT_TRUE((ip_bump.array() >= ip.array()).all());
    EXPECT_TRUE((alpha * ip.array() > ip_scaled.array()).all());
  }
}

TEST(UpdateTargets, ExampleValues) {
  const auto a = update_targets({{5.0, 10.0}}, {{1.0, 1.0}});
  EXPECT_EQ(a.targets[0], (std::vector<double>{7.5, 7.5}));
  EXPECT_DOUBLE_EQ(a.common[0], 7.5);

  const auto b = update_targets({{5.5, 7.5}}, {{1.0, 1.0}});
  EXPECT_EQ(b.targets[0], (std::vector<double>{6.5, 6.5}));

  const auto c = update_targets({{5.0, 10.0}}, {{1.0, 6.0}});
  EXPECT_NEAR(c.targets[0][0], 15.0 / 7.0, 1e-15);
  EXPECT_NEAR(c.targets[0][1], 90.0 / 7.0, 1e-14);
  EXPECT_NEAR(c.normalized_weights[0][0] + c.normalized_weights[0][1], 1.0, 1e-12);
  EXPECT_NEAR(c.common[0], 15.0 / 7.0, 1e-15);  // Gamma_{k,l} = beta_{k,l} * common
}

TEST(UpdateTargets, RejectsDeadUser) {
  EXPECT_THROW(update_targets({{0.0, 0.0}}, {{1.0, 1.0}}), DegenerateStreamError);
  EXPECT_THROW(update_targets({{1.0}}, {{1.0, 1.0}}), ConfigError);
}

TEST(FairnessGap, ExampleValues) {
  EXPECT_DOUBLE_EQ(fairness_gap({{6.125, 6.125}}, {{1.0, 1.0}}).total, 0.0);
  EXPECT_DOUBLE_EQ(fairness_gap({{5.0, 10.0}}, {{1.0, 1.0}}).total, 2.5);
  EXPECT_DOUBLE_EQ(fairness_gap({{2.0, 12.0}}, {{1.0, 6.0}}).total, 0.0);
  const auto two = fairness_gap({{5.0, 10.0}, {3.0, 3.0}}, {{1.0, 1.0}, {1.0, 1.0}});
  EXPECT_EQ(two.per_user, (std::vector<double>{2.5, 0.0}));
}

TEST(FairnessGap, RawModeUsesUnweightedMinimum) {
  // Weighted SINRs (4, 4) are balanced; the raw minimum is 2 < 4.
  EXPECT_DOUBLE_EQ(fairness_gap({{4.0, 8.0}}, {{1.0, 2.0}}, DeltaMinMode::weighted).total, 0.0);
  EXPECT_DOUBLE_EQ(fairness_gap({{4.0, 8.0}}, {{1.0, 2.0}}, DeltaMinMode::raw).total, 0.0);
  EXPECT_DOUBLE_EQ(fairness_gap({{1.0, 8.0}}, {{0.5, 2.0}}, DeltaMinMode::raw).total, 2.0);
  // Raw min above the weighted mean is clamped at zero.
  EXPECT_DOUBLE_EQ(fairness_gap({{6.0, 6.0}}, {{3.0, 3.0}}, DeltaMinMode::raw).total, 0.0);
}

TEST(LinearSearch, StubbedTraceDropsTargets) {
  // The weak stream falls short of each target, the strong one meets it.
  const std::vector<double> weak{5.5, 5.75, 6.125};
  std::size_t call = 0;
  const TargetEvaluator evaluate = [&](const TargetState& t) {
    const double target = t.targets[0][0];
    return AchievedSinrs{{{std::min(weak[std::min(call++, weak.size() - 1)], target), target}}, 1};
  };
  const auto result = linear_search({{5.0, 10.0}}, {{1.0, 1.0}}, 1e-3, BalanceOptions{}, evaluate);
  ASSERT_EQ(result.steps.size(), 3u);
  EXPECT_EQ(result.steps[0].targets.common[0], 7.5);
  EXPECT_EQ(result.steps[1].targets.common[0], 6.5);
  EXPECT_EQ(result.steps[2].targets.common[0], 6.125);
  EXPECT_TRUE(result.converged);
  EXPECT_EQ(result.fairness_gap, 0.0);
}

TEST(LinearSearch, OuterCapFlagsNonConvergence) {
  const TargetEvaluator never = [](const TargetState& t) {
    return AchievedSinrs{{{t.targets[0][0] * 0.5, t.targets[0][1] * 1.5}}, 1};
  };
  BalanceOptions options;
  options.outer_limit = 7;
  const auto result = linear_search({{5.0, 10.0}}, {{1.0, 1.0}}, 1e-3, options, never);
  EXPECT_EQ(result.steps.size(), 7u);
  EXPECT_FALSE(result.converged);
  EXPECT_GT(result.fairness_gap, 1e-3);
}

TEST(InnerLoop, MetTargetsStopWithinTwoSweeps) {
  const NetworkConfig config = NetworkConfig::symmetric(1, 1, 1, 1, 4.0);
  const ChannelSet channels(1, {CMatrix::Ones(1, 1)});
  const BeamformerSet bf{{CMatrix::Ones(1, 1)}, {CMatrix::Ones(1, 1)}};
  const auto result = run_inner_loop(channels, bf, {{2.0}}, config);
  EXPECT_LE(result.iterations, 2);
  EXPECT_DOUBLE_EQ(result.powers(0, 0), 2.0);
}

TEST(InnerLoop, ContractiveLimitMatchesDirectSolveFromTwoStarts) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ci = contractive_instance(seed, 0.3 + 0.03 * static_cast<double>(seed));
    const Eigen::VectorXd direct = fixed_point_direct(ci.map);
    const auto& cfg = ci.instance.config;

    const auto from_default = run_inner_loop(ci.instance.channels, ci.instance.bf, ci.targets, cfg);
    const Eigen::VectorXd low_start = Eigen::VectorXd::Constant(cfg.total_streams(), ci.start_level / 10.0);
    const auto from_low = run_inner_loop(ci.instance.channels, ci.instance.bf, ci.targets, cfg,
                                         PowerAllocation::from_flat(cfg, low_start));
    EXPECT_LT(from_default.iterations, cfg.inner_limit);
    EXPECT_LT(max_abs_diff(from_default.powers.flat(), direct), 1e-6);
    EXPECT_LT(max_abs_diff(from_low.powers.flat(), direct), 1e-6);
    EXPECT_LT(max_abs_diff(from_default.powers.flat(), from_low.powers.flat()), 1e-6);

    InnerLoopOptions async;
    async.schedule = Schedule::asynchronous;
    async.schedule_seed = seed;
    const auto from_async = run_inner_loop(ci.instance.channels, ci.instance.bf, ci.targets, cfg, async);
    EXPECT_LT(max_abs_diff(from_async.powers.flat(), direct), 1e-6);
  }
}

TEST(InnerLoop, TraceRecordsEverySweep) {
  const auto ci = contractive_instance(3, 0.5);
  InnerLoopOptions options;
  options.record_trace = true;
  const auto result = run_inner_loop(ci.instance.channels, ci.instance.bf, ci.targets, ci.instance.config, options);
  ASSERT_EQ(result.trace.size(), static_cast<std::size_t>(result.iterations) + 1);
  EXPECT_EQ(result.trace.front(), PowerAllocation::equal_split(ci.instance.config).flat());
  EXPECT_EQ(result.trace.back(), result.powers.flat());
}

TEST(InnerLoop, InfeasibleTargetsSaturateEveryBudget) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(seed);
    const StreamTable s = all_sinrs(inst.channels, inst.bf, PowerAllocation::equal_split(inst.config));
    const auto result = run_inner_loop(inst.channels, inst.bf, scaled(s, 100.0), inst.config);
    EXPECT_LE(result.iterations, inst.config.inner_limit);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(result.powers.user_total(k), inst.config.power_budget[k], 1e-9);
      EXPECT_LE(result.powers.user_total(k), inst.config.power_budget[k]);
    }
  }
}

TEST(InnerLoop, AsynchronousScheduleIsSeedDeterministic) {
  const auto inst = random_instance(4);
  const StreamTable s = all_sinrs(inst.channels, inst.bf, PowerAllocation::equal_split(inst.config));
  InnerLoopOptions options;
  options.schedule = Schedule::asynchronous;
  options.schedule_seed = 99;
  const auto a = run_inner_loop(inst.channels, inst.bf, s, inst.config, options);
  const auto b = run_inner_loop(inst.channels, inst.bf, s, inst.config, options);
  EXPECT_EQ(a.powers.flat(), b.powers.flat());
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Balance, EqualWeightsBalanceSubstreams) {
  const int n = 1000;
  int within = 0;
  int binding_steps = 0;
  int rising_steps = 0;
  for (int r = 0; r < n; ++r) {
    const auto inst = random_instance(20000 + static_cast<std::uint64_t>(r));
    const auto result = balance(inst.channels, inst.bf, inst.config);
    if (result.converged) {
      EXPECT_LE(result.fairness_gap, inst.config.epsilon);
    }
    EXPECT_EQ(result.outer_iters, static_cast<int>(result.steps.size()));
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      const auto& s = result.final_sinrs()[k];
      const double ratio = *std::max_element(s.begin(), s.end()) / *std::min_element(s.begin(), s.end());
      ok = ok && ratio >= 0.98 && ratio <= 1.02;
      EXPECT_LE(result.powers.user_total(k), inst.config.power_budget[k]);
    }
    within += ok ? 1 : 0;
    for (std::size_t m = 0; m + 1 < result.steps.size(); ++m) {
      for (int k = 0; k < 3; ++k) {
        if (result.power_trace[m].user_total(k) < inst.config.power_budget[k] - 1e-9) continue;
        ++binding_steps;
        const double now = result.steps[m].targets.common[k];
        if (result.steps[m + 1].targets.common[k] > now * (1.0 + 1e-3)) ++rising_steps;
      }
    }
  }
  EXPECT_GE(within, 950);
  ASSERT_GT(binding_steps, 0);
  EXPECT_EQ(rising_steps, 0) << "of " << binding_steps << " binding steps";
}

TEST(Balance, WeightedRatioReachesBeta) {
  int eligible = 0;
  int converged = 0;
  for (int r = 0; r < 200; ++r) {
    auto inst = random_instance(30000 + static_cast<std::uint64_t>(r));
    StreamTable s = all_sinrs(inst.channels, inst.bf, PowerAllocation::equal_split(inst.config));
    sort_streams_by_sinr(inst.bf, s);
    inst.config.weights.assign(3, {1.0, 6.0});
    const auto result = balance(inst.channels, inst.bf, inst.config);
    for (int k = 0; k < 3; ++k) {
      if (s[k][1] / s[k][0] >= 6.0) continue;
      ++eligible;
      if (!result.converged) continue;
      ++converged;
      const auto& f = result.final_sinrs()[k];
      EXPECT_NEAR(f[1] / f[0], 6.0, 0.06);
    }
  }
  ASSERT_GT(eligible, 0);
  EXPECT_GE(converged, 0.9 * eligible);
}

}  // namespace
}  // namespace mimoic
