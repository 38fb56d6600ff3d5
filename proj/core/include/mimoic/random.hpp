#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "mimoic/network.hpp"

namespace mimoic {

/// Derives an independent substream seed from a base seed and a path of
/// integers (for example realization id, then channel block). Each path
/// element is folded in through a SplitMix64 round, so distinct paths give
/// statistically unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Seedable generator with bit-reproducible output on every platform.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// The standard distributions are implementation-defined, so uniform and
/// Gaussian variates are produced here directly (53-bit uniforms, Box-Muller).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  bool bit() { return (engine_() >> 63) != 0; }

  /// Uniform on [0, 1).
  double uniform();

  /// Standard real Gaussian N(0, 1).
  double normal();

  /// Circularly-symmetric CN(0, 1): real and imaginary parts are N(0, 1/2).
  Complex complex_normal();

  /// Uniform integer on [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mimoic
