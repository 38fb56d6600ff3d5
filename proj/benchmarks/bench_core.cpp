#include <benchmark/benchmark.h>

#include <cmath>

#include "mimoic/beamforming.hpp"
#include "mimoic/convergence.hpp"
#include "mimoic/metrics.hpp"
#include "mimoic/power_balancer.hpp"

namespace {

using namespace mimoic;

NetworkConfig paper_network(double snr_db) {
  return NetworkConfig::symmetric(3, 4, 4, 2, std::pow(10.0, snr_db / 10.0));
}

void BM_MaxSinrDesign(benchmark::State& state) {
  const auto config = paper_network(10.0);
  const auto channels = generate_channels(config, 1);
  for (auto _ : state) benchmark::DoNotOptimize(max_sinr_alternate(channels, config, 2));
}
BENCHMARK(BM_MaxSinrDesign);

void BM_Balance(benchmark::State& state) {
  const auto config = paper_network(static_cast<double>(state.range(0)));
  const auto channels = generate_channels(config, 1);
  const auto bf = max_sinr_alternate(channels, config, 2);
  for (auto _ : state) benchmark::DoNotOptimize(balance(channels, bf, config));
}
BENCHMARK(BM_Balance)->Arg(0)->Arg(10)->Arg(15);

void BM_SimulateBer(benchmark::State& state) {
  const auto config = paper_network(10.0);
  const auto channels = generate_channels(config, 1);
  const auto bf = max_sinr_alternate(channels, config, 2);
  const auto pw = PowerAllocation::equal_split(config);
  BerOptions options;
  options.symbols = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_ber(channels, bf, pw, options));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateBer)->Arg(1000);

void BM_Certify(benchmark::State& state) {
  const auto config = paper_network(10.0);
  const auto channels = generate_channels(config, 1);
  const auto bf = max_sinr_alternate(channels, config, 2);
  const auto s = all_sinrs(channels, bf, PowerAllocation::equal_split(config));
  const auto map = build_map(channels, bf, update_targets(s, config.weights).targets);
  for (auto _ : state) benchmark::DoNotOptimize(certify(map));
}
BENCHMARK(BM_Certify);

}  // namespace

BENCHMARK_MAIN();
