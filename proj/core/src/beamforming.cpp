#include "mimoic/beamforming.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mimoic/random.hpp"

namespace mimoic {

namespace {

CVector effective_channel(const ChannelSet& channels, const BeamformerSet& bf, int rx, int tx, int stream) {
  return channels(rx, tx) * bf.transmit[static_cast<std::size_t>(tx)].col(stream);
}

double quadratic_form(const CVector& v, const CMatrix& m) { return (v.adjoint() * m * v)(0, 0).real(); }

}  // namespace

CMatrix received_covariance(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k) {
  const auto n = channels.rx_antennas(k);
  CMatrix total = CMatrix::Zero(n, n);
  for (int j = 0; j < channels.users(); ++j) {
    const CMatrix& h = channels(k, j);
    const CMatrix& u = bf.transmit[static_cast<std::size_t>(j)];
    for (Eigen::Index s = 0; s < u.cols(); ++s) {
      const CVector g = h * u.col(s);
      total.noalias() += pw(j, static_cast<int>(s)) * (g * g.adjoint());
    }
  }
  return total;
}

CovarianceBundle covariances(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k,
                             int l) {
  const CVector g = effective_channel(channels, bf, k, k, l);
  CovarianceBundle out;
  out.unit_signal = g * g.adjoint();
  out.signal = pw(k, l) * out.unit_signal;
  out.interference = received_covariance(channels, bf, pw, k) - out.signal;
  // The subtraction leaves rounding-level non-Hermitian residue.
  out.interference = (0.5 * (out.interference + out.interference.adjoint())).eval();
  out.interference_noise = out.interference + CMatrix::Identity(g.size(), g.size());
  return out;
}

double sinr(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k, int l) {
  const CVector v = bf.receive[static_cast<std::size_t>(k)].col(l);
  if (v.squaredNorm() == 0.0) {
    throw DegenerateStreamError("zero receive filter for stream (" + std::to_string(k + 1) + ", " +
                                std::to_string(l + 1) + ")");
  }
  const auto cov = covariances(channels, bf, pw, k, l);
  return quadratic_form(v, cov.signal) / quadratic_form(v, cov.interference_noise);
}

StreamTable all_sinrs(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw) {
  StreamTable out(static_cast<std::size_t>(channels.users()));
  for (int k = 0; k < channels.users(); ++k) {
    const auto d = bf.transmit[static_cast<std::size_t>(k)].cols();
    for (Eigen::Index l = 0; l < d; ++l) out[static_cast<std::size_t>(k)].push_back(sinr(channels, bf, pw, k, static_cast<int>(l)));
  }
  return out;
}

CVector mmse_receive_filter(const CMatrix& B, const CVector& h_eff) {
  Eigen::LLT<CMatrix> llt(B);
  if (llt.info() != Eigen::Success) throw std::domain_error("interference-plus-noise covariance is not positive definite");
  CVector w = llt.solve(h_eff);
  const double norm = w.norm();
  if (!(norm > 0.0)) throw DegenerateStreamError("effective channel is zero; receive filter undefined");
  return w / norm;
}

std::vector<CMatrix> receive_filters(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw) {
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(channels.users()));
  for (int k = 0; k < channels.users(); ++k) {
    const CMatrix total = received_covariance(channels, bf, pw, k);
    const auto n = total.rows();
    const auto d = bf.transmit[static_cast<std::size_t>(k)].cols();
    CMatrix v(n, d);
    for (Eigen::Index l = 0; l < d; ++l) {
      const CVector g = effective_channel(channels, bf, k, k, static_cast<int>(l));
      CMatrix b = total - pw(k, static_cast<int>(l)) * (g * g.adjoint()) + CMatrix::Identity(n, n);
      b = (0.5 * (b + b.adjoint())).eval();
      v.col(l) = mmse_receive_filter(b, g);
    }
    out.push_back(std::move(v));
  }
  return out;
}

BeamformerSet random_beamformers(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  auto draw = [](Rng& rng, int rows, int cols) {
    CMatrix m(rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) m(r, c) = rng.complex_normal();
      m.col(c).normalize();
    }
    return m;
  };
  BeamformerSet bf;
  for (int k = 0; k < config.users(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    Rng tx_rng(derive_seed(seed, {0, kk}));
    Rng rx_rng(derive_seed(seed, {1, kk}));
    bf.transmit.push_back(draw(tx_rng, config.tx_antennas[kk], config.streams[kk]));
    bf.receive.push_back(draw(rx_rng, config.rx_antennas[kk], config.streams[kk]));
  }
  return bf;
}

MaxSinrDesign max_sinr_design(const ChannelSet& channels, const NetworkConfig& config, std::uint64_t init_seed) {
  config.validate();
  channels.check(config);
  const ChannelSet reverse = channels.reciprocal();
  const PowerAllocation design_power = PowerAllocation::equal_split(config);

  MaxSinrDesign out{random_beamformers(config, init_seed), {}};
  BeamformerSet& bf = out.beamformers;
  for (int it = 0; it < config.bf_iters; ++it) {
    bf.receive = receive_filters(channels, bf, design_power);
    bf.transmit = receive_filters(reverse, bf.swapped(), design_power);
    out.sinr_trace.push_back(all_sinrs(channels, bf, design_power));
  }
  return out;
}

BeamformerSet max_sinr_alternate(const ChannelSet& channels, const NetworkConfig& config, std::uint64_t init_seed) {
  return max_sinr_design(channels, config, init_seed).beamformers;
}

void sort_streams_by_sinr(BeamformerSet& bf, StreamTable& sinrs) {
  for (std::size_t k = 0; k < sinrs.size(); ++k) {
    auto& s = sinrs[k];
    std::vector<int> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[static_cast<std::size_t>(a)] < s[static_cast<std::size_t>(b)]; });
    CMatrix u = bf.transmit[k];
    CMatrix v = bf.receive[k];
    std::vector<double> sorted(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      u.col(static_cast<Eigen::Index>(i)) = bf.transmit[k].col(order[i]);
      v.col(static_cast<Eigen::Index>(i)) = bf.receive[k].col(order[i]);
      sorted[i] = s[static_cast<std::size_t>(order[i])];
    }
    bf.transmit[k] = std::move(u);
    bf.receive[k] = std::move(v);
    s = std::move(sorted);
  }
}

}  // namespace mimoic
