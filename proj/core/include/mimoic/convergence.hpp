#pragma once

// Affine form of the per-substream interference map, I(p) = T p + N, and the
// contraction / spectral-radius certificates that guarantee the uncapped
// power update converges linearly to a unique fixed point.

#include <span>
#include <vector>

#include "mimoic/network.hpp"

namespace mimoic {

struct LinearInterferenceMap {
  Eigen::MatrixXd T;      // flat (k,l) x flat (j,s), zero diagonal
  Eigen::VectorXd noise;  // N_{k,l} = Gamma_{k,l} / G_{k,l}^{k,l}
  Eigen::MatrixXd gains;  // G_{k,l}^{j,s} = |v_{k,l}^H H_kj u_{j,s}|^2
};

/// Cross-gain table G in flat user-major ordering.
Eigen::MatrixXd cross_gains(const ChannelSet& channels, const BeamformerSet& bf);

/// T_{i,j} = Gamma_i G_{i,j} / G_{i,i} off the diagonal, N_i = Gamma_i / G_{i,i}.
/// Throws DegenerateStreamError when a direct gain is zero.
LinearInterferenceMap build_map(const Eigen::MatrixXd& gains, const Eigen::VectorXd& targets);

LinearInterferenceMap build_map(const ChannelSet& channels, const BeamformerSet& bf, const StreamTable& targets);

/// Induced weighted max norm: max_i (sum_j T_ij v_j) / v_i. Requires v > 0.
double weighted_max_norm(const Eigen::MatrixXd& T, const Eigen::VectorXd& v);

struct SpectralEstimate {
  double rho = 0.0;
  Eigen::VectorXd perron;  // normalized to max entry 1
  int iterations = 0;
  bool converged = false;
};

/// Perron root of a nonnegative square matrix.
///
/// Power iteration on T + I (the shift makes the dominant root strictly
/// dominant even for the zero-diagonal, possibly periodic T) from the
/// all-ones vector. The Collatz-Wielandt quotients min/max_i (Tx)_i / x_i
/// bracket rho at every step; iteration stops when the bracket is narrower
/// than `tolerance` or after `max_iterations`, in which case `converged` is
/// false and the midpoint is returned.
SpectralEstimate spectral_radius(const Eigen::MatrixXd& T, double tolerance = 1e-10, int max_iterations = 10000);

/// Solves (I - T) p = N. Throws InfeasibleError unless rho(T) < 1.
Eigen::VectorXd fixed_point_direct(const LinearInterferenceMap& map);

struct ContractionCertificate {
  double c = 0.0;               // ||T||_inf^v for the weight below
  Eigen::VectorXd weight;       // v
  double c_perron = 0.0;        // ||T||_inf^v with v = Perron vector (tight choice); inf if unavailable
  double rho = 0.0;
  bool spectral_converged = false;
  bool contractive = false;     // c < 1
  Eigen::VectorXd fixed_point;  // empty unless rho < 1
};

/// Certificate with v = all-ones.
ContractionCertificate certify(const LinearInterferenceMap& map);
ContractionCertificate certify(const LinearInterferenceMap& map, const Eigen::VectorXd& weight);

/// Checks ||p^n - p*||_inf^v <= c^n ||p^0 - p*||_inf^v (1 + 1e-6) along a
/// recorded trace of uncapped iterates. Requires a contractive certificate
/// with a fixed point; returns false otherwise.
bool convergence_rate_check(std::span<const Eigen::VectorXd> trace, const ContractionCertificate& certificate);

}  // namespace mimoic
