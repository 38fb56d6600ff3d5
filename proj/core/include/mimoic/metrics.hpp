#pragma once

// Sum-rate and uncoded QPSK Monte Carlo over the full transmit, channel and
// linear-receive chain.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mimoic/network.hpp"

namespace mimoic {

class Rng;

/// Sum over all substreams of log2(1 + SINR). Throws std::domain_error on a
/// negative SINR.
double sum_rate(const StreamTable& sinrs);

/// Gray-mapped unit-energy QPSK: bit b0 picks the sign of the real part,
/// b1 the sign of the imaginary part, with 0 -> +. (0,0) maps to (1+i)/sqrt(2).
Complex qpsk_map(bool b0, bool b1);
std::pair<bool, bool> qpsk_demap(Complex symbol);

/// One channel use of the whole network.
struct LinkRealization {
  std::vector<CVector> symbols;   // d_j QPSK symbols per user
  std::vector<CVector> transmit;  // x_j = U_j sqrt(P_j) d_j
  std::vector<CVector> noise;     // z_k
  std::vector<CVector> received;  // y_k = sum_j H_kj x_j + z_k
  std::vector<std::vector<std::pair<bool, bool>>> bits;
};

LinkRealization draw_link(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, Rng& rng,
                          bool with_noise = true);

struct StreamMetrics {
  double sinr = 0.0;
  double rate = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;

  double ber() const { return bits == 0 ? 0.0 : static_cast<double>(bit_errors) / static_cast<double>(bits); }
};

struct MetricReport {
  std::vector<std::vector<StreamMetrics>> streams;  // [user][stream]
  std::vector<double> user_sum_rate;
  double sum_rate = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits = 0;

  double ber() const { return bits == 0 ? 0.0 : static_cast<double>(bit_errors) / static_cast<double>(bits); }
};

/// Analytic SINR and rates only; no simulated bits.
MetricReport analytic_report(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw);

struct BerOptions {
  std::uint64_t symbols = 1000;  // channel uses
  std::uint64_t seed = 0;
  bool noise = true;
  std::uint64_t block_size = 1024;  // channel uses per RNG substream
};

/// Monte Carlo uncoded BER. Every substream is detected by a hard decision on
/// v^H y after removing the phase of its effective gain v^H H_kk u. Channel
/// uses are grouped into blocks, each with its own RNG substream derived from
/// (seed, block), so the result depends only on the inputs.
MetricReport simulate_ber(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw,
                          const BerOptions& options);

/// Q(x) = P(N(0,1) > x).
double gaussian_q(double x);

/// CSV header matching write_metric_rows.
std::string metric_csv_header();

/// One row per substream: scenario, seed, snr_db, realization, variant, k,
/// l (1-based), sinr, rate, ber, bit_errors, bits.
void write_metric_rows(std::ostream& out, const MetricReport& report, const std::string& scenario,
                       std::uint64_t seed, double snr_db, long realization, const std::string& variant);

}  // namespace mimoic
