#include "mimoic/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "mimoic/beamforming.hpp"
#include "mimoic/random.hpp"

namespace mimoic {

namespace {

std::string number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double sum_rate(const StreamTable& sinrs) {
  double total = 0.0;
  for (const auto& user : sinrs) {
    for (double s : user) {
      if (!(s >= 0.0)) throw std::domain_error("sum rate: SINR must be nonnegative");
      total += std::log2(1.0 + s);
    }
  }
  return total;
}

Complex qpsk_map(bool b0, bool b1) {
  constexpr double a = std::numbers::sqrt2 / 2.0;
  return {b0 ? -a : a, b1 ? -a : a};
}

std::pair<bool, bool> qpsk_demap(Complex symbol) { return {symbol.real() < 0.0, symbol.imag() < 0.0}; }

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

LinkRealization draw_link(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, Rng& rng,
                          bool with_noise) {
  const int k_users = channels.users();
  LinkRealization link;
  for (int j = 0; j < k_users; ++j) {
    const CMatrix& u = bf.transmit[static_cast<std::size_t>(j)];
    CVector symbols(u.cols());
    std::vector<std::pair<bool, bool>> bits;
    for (Eigen::Index s = 0; s < u.cols(); ++s) {
      const bool b0 = rng.bit();
      const bool b1 = rng.bit();
      bits.emplace_back(b0, b1);
      symbols[s] = qpsk_map(b0, b1);
    }
    const Eigen::VectorXd amplitude = pw.user(j).cwiseSqrt();
    link.transmit.push_back(u * amplitude.cast<Complex>().cwiseProduct(symbols));
    link.symbols.push_back(std::move(symbols));
    link.bits.push_back(std::move(bits));
  }
  for (int k = 0; k < k_users; ++k) {
    CVector z = CVector::Zero(channels.rx_antennas(k));
    if (with_noise) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.complex_normal();
    }
    CVector y = z;
    for (int j = 0; j < k_users; ++j) y.noalias() += channels(k, j) * link.transmit[static_cast<std::size_t>(j)];
    link.noise.push_back(std::move(z));
    link.received.push_back(std::move(y));
  }
  return link;
}

MetricReport analytic_report(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw) {
  MetricReport report;
  const StreamTable sinrs = all_sinrs(channels, bf, pw);
  for (const auto& user : sinrs) {
    std::vector<StreamMetrics> row;
    double user_rate = 0.0;
    for (double s : user) {
      StreamMetrics m;
      m.sinr = s;
      m.rate = std::log2(1.0 + s);
      user_rate += m.rate;
      row.push_back(m);
    }
    report.streams.push_back(std::move(row));
    report.user_sum_rate.push_back(user_rate);
    report.sum_rate += user_rate;
  }
  return report;
}

MetricReport simulate_ber(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw,
                          const BerOptions& options) {
  if (options.symbols < 1) throw ConfigError("BER simulation needs at least one symbol");
  if (options.block_size < 1) throw ConfigError("BER block size must be positive");
  MetricReport report = analytic_report(channels, bf, pw);
  const int k_users = channels.users();

  // Phase-corrected detectors: conj(v^H H_kk u) v^H, one row per substream.
  std::vector<CMatrix> detectors;
  for (int k = 0; k < k_users; ++k) {
    const CMatrix& v = bf.receive[static_cast<std::size_t>(k)];
    const CMatrix gains = v.adjoint() * channels(k, k) * bf.transmit[static_cast<std::size_t>(k)];
    CMatrix det = v.adjoint();
    for (Eigen::Index l = 0; l < det.rows(); ++l) det.row(l) *= std::conj(gains(l, l));
    detectors.push_back(std::move(det));
  }

  for (std::uint64_t start = 0; start < options.symbols; start += options.block_size) {
    Rng rng(derive_seed(options.seed, {start / options.block_size}));
    const std::uint64_t stop = std::min(options.symbols, start + options.block_size);
    for (std::uint64_t t = start; t < stop; ++t) {
      const LinkRealization link = draw_link(channels, bf, pw, rng, options.noise);
      for (int k = 0; k < k_users; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const CVector decisions = detectors[kk] * link.received[kk];
        for (Eigen::Index l = 0; l < decisions.size(); ++l) {
          const auto [d0, d1] = qpsk_demap(decisions[l]);
          const auto [b0, b1] = link.bits[kk][static_cast<std::size_t>(l)];
          auto& m = report.streams[kk][static_cast<std::size_t>(l)];
          m.bit_errors += static_cast<std::uint64_t>(d0 != b0) + static_cast<std::uint64_t>(d1 != b1);
          m.bits += 2;
        }
      }
    }
  }
  for (const auto& user : report.streams) {
    for (const auto& m : user) {
      report.bit_errors += m.bit_errors;
      report.bits += m.bits;
    }
  }
  return report;
}

std::string metric_csv_header() {
  return "scenario,seed,snr_db,realization,variant,k,l,sinr,rate,ber,bit_errors,bits";
}

void write_metric_rows(std::ostream& out, const MetricReport& report, const std::string& scenario,
                       std::uint64_t seed, double snr_db, long realization, const std::string& variant) {
  for (std::size_t k = 0; k < report.streams.size(); ++k) {
    for (std::size_t l = 0; l < report.streams[k].size(); ++l) {
      const auto& m = report.streams[k][l];
      out << scenario << ',' << seed << ',' << number(snr_db) << ',' << realization << ',' << variant << ','
          << k + 1 << ',' << l + 1 << ',' << number(m.sinr) << ',' << number(m.rate) << ',' << number(m.ber())
          << ',' << m.bit_errors << ',' << m.bits << '\n';
    }
  }
}

}  // namespace mimoic
