#include "mimoic/convergence.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mimoic {

Eigen::MatrixXd cross_gains(const ChannelSet& channels, const BeamformerSet& bf) {
  std::vector<int> streams;
  for (const auto& u : bf.transmit) streams.push_back(static_cast<int>(u.cols()));
  const auto offsets = stream_offsets(streams);
  int total = 0;
  for (int d : streams) total += d;

  Eigen::MatrixXd gains(total, total);
  for (int k = 0; k < channels.users(); ++k) {
    const CMatrix& v = bf.receive[static_cast<std::size_t>(k)];
    for (int j = 0; j < channels.users(); ++j) {
      // Row l, column s: v_{k,l}^H H_kj u_{j,s}.
      const CMatrix coupling = v.adjoint() * channels(k, j) * bf.transmit[static_cast<std::size_t>(j)];
      gains.block(offsets[static_cast<std::size_t>(k)], offsets[static_cast<std::size_t>(j)], coupling.rows(),
                  coupling.cols()) = coupling.cwiseAbs2();
    }
  }
  return gains;
}

LinearInterferenceMap build_map(const Eigen::MatrixXd& gains, const Eigen::VectorXd& targets) {
  const auto n = gains.rows();
  if (gains.cols() != n || targets.size() != n) throw ConfigError("gain table and targets disagree in size");
  LinearInterferenceMap map{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n), gains};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double direct = gains(i, i);
    if (!(direct > 0.0)) {
      throw DegenerateStreamError("direct gain of flat stream " + std::to_string(i + 1) + " is zero");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) map.T(i, j) = targets[i] * gains(i, j) / direct;
    }
    map.noise[i] = targets[i] / direct;
  }
  return map;
}

LinearInterferenceMap build_map(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets) {
  std::vector<double> flat;
  for (const auto& row : targets) flat.insert(flat.end(), row.begin(), row.end());
  return build_map(cross_gains(channels, bf),
                   Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
}

double weighted_max_norm(const Eigen::MatrixXd& T, const Eigen::VectorXd& v) {
  if (T.rows() != T.cols() || v.size() != T.cols()) throw ConfigError("weighted norm: dimension mismatch");
  for (double x : v) {
    if (!(x > 0.0)) throw std::domain_error("weighted norm needs a strictly positive weight vector");
  }
  const Eigen::VectorXd weighted = T.cwiseAbs() * v;
  return weighted.cwiseQuotient(v).maxCoeff();
}

SpectralEstimate spectral_radius(const Eigen::MatrixXd& T, double tolerance, int max_iterations) {
  if (T.rows() != T.cols()) throw ConfigError("spectral radius needs a square matrix");
  if ((T.array() < 0.0).any()) throw std::domain_error("spectral radius: matrix has negative entries");
  SpectralEstimate out;
  const auto n = T.rows();
  if (n == 0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double lower = 0.0;
  double upper = 0.0;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const Eigen::VectorXd y = T * x;
    const Eigen::VectorXd ratio = y.cwiseQuotient(x);
    lower = ratio.minCoeff();
    upper = ratio.maxCoeff();
    if (upper - lower < tolerance) {
      out.converged = true;
      break;
    }
    x = y + x;
    x /= x.maxCoeff();
  }
  out.rho = 0.5 * (lower + upper);
  out.perron = x;
  return out;
}

Eigen::VectorXd fixed_point_direct(const LinearInterferenceMap& map) {
  const auto spectral = spectral_radius(map.T);
  if (!(spectral.rho < 1.0)) {
    throw InfeasibleError("targets are infeasible: spectral radius " + std::to_string(spectral.rho) + " >= 1");
  }
  const auto n = map.T.rows();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - map.T;
  return system.partialPivLu().solve(map.noise);
}

ContractionCertificate certify(const LinearInterferenceMap& map) {
  return certify(map, Eigen::VectorXd::Ones(map.T.rows()));
}

ContractionCertificate certify(const LinearInterferenceMap& map, const Eigen::VectorXd& weight) {
  ContractionCertificate out;
  out.weight = weight;
  out.c = weighted_max_norm(map.T, weight);
  const auto spectral = spectral_radius(map.T);
  out.rho = spectral.rho;
  out.spectral_converged = spectral.converged;
  out.c_perron = (spectral.perron.size() > 0 && spectral.perron.minCoeff() > 0.0)
                     ? weighted_max_norm(map.T, spectral.perron)
                     : std::numeric_limits<double>::infinity();
  out.contractive = out.c < 1.0;
  if (out.rho < 1.0) out.fixed_point = fixed_point_direct(map);
  return out;
}

bool convergence_rate_check(std::span<const Eigen::VectorXd> trace, const ContractionCertificate& certificate) {
  if (!certificate.contractive || certificate.fixed_point.size() == 0) return false;
  if (trace.empty()) return true;
  const Eigen::VectorXd& fixed = certificate.fixed_point;
  auto distance = [&](const Eigen::VectorXd& p) {
    return (p - fixed).cwiseAbs().cwiseQuotient(certificate.weight).maxCoeff();
  };
  const double initial = distance(trace.front());
  double bound = initial;
  for (std::size_t n = 0; n < trace.size(); ++n) {
    if (trace[n].size() != fixed.size()) return false;
    if (distance(trace[n]) > bound * (1.0 + 1e-6)) return false;
    bound *= certificate.c;
  }
  return true;
}

}  // namespace mimoic
