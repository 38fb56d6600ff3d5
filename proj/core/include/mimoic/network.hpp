#pragma once

// Data model for a K-user MIMO interference channel: dimensions, channel
// grid, beamformers and per-substream powers.

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mimoic {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Per-substream scalars addressed as table[user][stream], both 0-based.
using StreamTable = std::vector<std::vector<double>>;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A substream whose desired signal is nulled by its own receive filter.
struct DegenerateStreamError : std::domain_error {
  using std::domain_error::domain_error;
};

struct InfeasibleError : std::domain_error {
  using std::domain_error::domain_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimensions, budgets and tolerances of one interference network.
///
/// The user count is implied by the length of the per-user vectors. Weights
/// are the per-substream priorities; equal weights request plain substream
/// fairness.
struct NetworkConfig {
  std::vector<int> tx_antennas;      // M_k
  std::vector<int> rx_antennas;      // N_k
  std::vector<int> streams;          // d_k
  std::vector<double> power_budget;  // p_k, linear scale
  StreamTable weights;               // priority of substream (k, l)
  double epsilon = 1e-3;
  int inner_limit = 100;
  int bf_iters = 16;

  int users() const { return static_cast<int>(streams.size()); }
  int total_streams() const;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;

  /// Same antennas, streams and budget for every user; unit weights.
  static NetworkConfig symmetric(int users, int tx, int rx, int streams, double power);
};

/// Transmit and receive antenna counts swapped; used for the reciprocal network.
NetworkConfig reciprocal(const NetworkConfig& config);

/// 1-based flat position of substream (user, stream) in user-major order.
int flatten_index(int user, int stream, std::span<const int> streams);

/// Inverse of flatten_index; returns the 1-based (user, stream) pair.
std::pair<int, int> unflatten_index(int flat, std::span<const int> streams);

/// 0-based offsets of each user's first substream in the flat ordering.
std::vector<int> stream_offsets(std::span<const int> streams);

/// Complete K x K grid of channel matrices; block (rx, tx) is N_rx x M_tx.
class ChannelSet {
 public:
  /// `blocks` holds the grid in row-major order (index rx * K + tx).
  ChannelSet(int users, std::vector<CMatrix> blocks);

  int users() const { return users_; }
  const CMatrix& operator()(int rx, int tx) const;

  int rx_antennas(int user) const;
  int tx_antennas(int user) const;

  /// Throws ConfigError unless every block matches the configured dimensions.
  void check(const NetworkConfig& config) const;

  /// Network with the roles of transmitters and receivers exchanged:
  /// block (k, j) becomes H_{jk}^H.
  ChannelSet reciprocal() const;

  const std::vector<CMatrix>& blocks() const { return blocks_; }

 private:
  int users_;
  std::vector<CMatrix> blocks_;
};

/// Per-user transmit (M_k x d_k) and receive (N_k x d_k) matrices with
/// unit-norm columns.
struct BeamformerSet {
  std::vector<CMatrix> transmit;
  std::vector<CMatrix> receive;

  int users() const { return static_cast<int>(transmit.size()); }

  /// Dimensions and unit-norm columns (within 1e-12); throws ConfigError.
  void check(const NetworkConfig& config) const;

  /// Transmit and receive exchanged, for use on the reciprocal network.
  BeamformerSet swapped() const { return {receive, transmit}; }
};

/// Nonnegative per-substream powers that respect every user's budget.
class PowerAllocation {
 public:
  static constexpr double kBudgetSlack = 1e-9;

  /// All powers zero.
  explicit PowerAllocation(const NetworkConfig& config);

  /// p_k / d_k on every substream.
  static PowerAllocation equal_split(const NetworkConfig& config);

  /// From the user-major flat vector.
  static PowerAllocation from_flat(const NetworkConfig& config, const Eigen::VectorXd& flat);

  int users() const { return static_cast<int>(powers_.size()); }
  int streams(int user) const;
  double operator()(int user, int stream) const;
  const Eigen::VectorXd& user(int user) const;
  double user_total(int user) const { return user_powers(user).sum(); }
  double budget(int user) const;

  /// Replaces one user's powers; throws ConfigError if any entry is negative
  /// or the sum exceeds the budget.
  void set_user(int user, Eigen::VectorXd powers);
  void set(int user, int stream, double power);

  Eigen::VectorXd flat() const;

 private:
  PowerAllocation() = default;
  const Eigen::VectorXd& user_powers(int user) const;
  void check_user(int user, const Eigen::VectorXd& powers) const;

  std::vector<double> budget_;
  std::vector<Eigen::VectorXd> powers_;
};

/// I.i.d. CN(0, 1) entries; block (rx, tx) draws from its own RNG substream
/// derived from (seed, rx, tx), so the output is a pure function of its inputs.
ChannelSet generate_channels(const NetworkConfig& config, std::uint64_t seed);

}  // namespace mimoic
