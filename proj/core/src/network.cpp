#include "mimoic/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mimoic/random.hpp"

namespace mimoic {

namespace {

std::string user_tag(int k) { return "user " + std::to_string(k + 1); }

}  // namespace

int NetworkConfig::total_streams() const { return std::accumulate(streams.begin(), streams.end(), 0); }

void NetworkConfig::validate() const {
  const auto k_users = streams.size();
  if (k_users == 0) throw ConfigError("network needs at least one user");
  if (tx_antennas.size() != k_users || rx_antennas.size() != k_users || power_budget.size() != k_users ||
      weights.size() != k_users) {
    throw ConfigError("per-user vectors disagree on the user count");
  }
  for (std::size_t k = 0; k < k_users; ++k) {
    const int kk = static_cast<int>(k);
    if (tx_antennas[k] < 1 || rx_antennas[k] < 1) throw ConfigError(user_tag(kk) + ": antenna counts must be >= 1");
    if (streams[k] < 1 || streams[k] > std::min(tx_antennas[k], rx_antennas[k])) {
      throw ConfigError(user_tag(kk) + ": stream count must lie in [1, min(M, N)]");
    }
    if (!(power_budget[k] > 0.0) || !std::isfinite(power_budget[k])) {
      throw ConfigError(user_tag(kk) + ": power budget must be positive");
    }
    if (weights[k].size() != static_cast<std::size_t>(streams[k])) {
      throw ConfigError(user_tag(kk) + ": need one weight per stream");
    }
    for (double w : weights[k]) {
      if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError(user_tag(kk) + ": weights must be positive");
    }
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (inner_limit < 1) throw ConfigError("inner_limit must be >= 1");
  if (bf_iters < 0) throw ConfigError("bf_iters must be >= 0");
}

NetworkConfig NetworkConfig::symmetric(int users, int tx, int rx, int streams, double power) {
  if (users < 1) throw ConfigError("network needs at least one user");
  NetworkConfig config;
  const auto n = static_cast<std::size_t>(users);
  config.tx_antennas.assign(n, tx);
  config.rx_antennas.assign(n, rx);
  config.streams.assign(n, streams);
  config.power_budget.assign(n, power);
  config.weights.assign(n, std::vector<double>(static_cast<std::size_t>(std::max(streams, 0)), 1.0));
  config.validate();
  return config;
}

NetworkConfig reciprocal(const NetworkConfig& config) {
  NetworkConfig out = config;
  std::swap(out.tx_antennas, out.rx_antennas);
  return out;
}

std::vector<int> stream_offsets(std::span<const int> streams) {
  std::vector<int> offsets(streams.size(), 0);
  int running = 0;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    offsets[k] = running;
    running += streams[k];
  }
  return offsets;
}

int flatten_index(int user, int stream, std::span<const int> streams) {
  if (user < 1 || user > static_cast<int>(streams.size())) throw IndexError("user index out of range");
  if (stream < 1 || stream > streams[static_cast<std::size_t>(user - 1)]) throw IndexError("stream index out of range");
  int flat = stream;
  for (int m = 0; m < user - 1; ++m) flat += streams[static_cast<std::size_t>(m)];
  return flat;
}

std::pair<int, int> unflatten_index(int flat, std::span<const int> streams) {
  if (flat < 1) throw IndexError("flat index out of range");
  int remaining = flat;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    if (remaining <= streams[k]) return {static_cast<int>(k) + 1, remaining};
    remaining -= streams[k];
  }
  throw IndexError("flat index out of range");
}

// ChannelSet

ChannelSet::ChannelSet(int users, std::vector<CMatrix> blocks) : users_(users), blocks_(std::move(blocks)) {
  if (users_ < 1) throw ConfigError("channel grid needs at least one user");
  if (blocks_.size() != static_cast<std::size_t>(users_) * static_cast<std::size_t>(users_)) {
    throw ConfigError("channel grid is incomplete");
  }
  for (int k = 0; k < users_; ++k) {
    for (int j = 0; j < users_; ++j) {
      const CMatrix& h = (*this)(k, j);
      if (h.rows() != (*this)(k, 0).rows() || h.cols() != (*this)(0, j).cols() || h.size() == 0) {
        throw ConfigError("channel block (" + std::to_string(k + 1) + ", " + std::to_string(j + 1) +
                          ") has inconsistent dimensions");
      }
    }
  }
}

const CMatrix& ChannelSet::operator()(int rx, int tx) const {
  if (rx < 0 || rx >= users_ || tx < 0 || tx >= users_) throw IndexError("channel block index out of range");
  return blocks_[static_cast<std::size_t>(rx * users_ + tx)];
}

int ChannelSet::rx_antennas(int user) const { return static_cast<int>((*this)(user, 0).rows()); }
int ChannelSet::tx_antennas(int user) const { return static_cast<int>((*this)(0, user).cols()); }

void ChannelSet::check(const NetworkConfig& config) const {
  if (config.users() != users_) throw ConfigError("channel grid user count does not match the configuration");
  for (int k = 0; k < users_; ++k) {
    if (rx_antennas(k) != config.rx_antennas[static_cast<std::size_t>(k)] ||
        tx_antennas(k) != config.tx_antennas[static_cast<std::size_t>(k)]) {
      throw ConfigError(user_tag(k) + ": channel dimensions do not match the configuration");
    }
  }
}

ChannelSet ChannelSet::reciprocal() const {
  std::vector<CMatrix> out;
  out.reserve(blocks_.size());
  for (int k = 0; k < users_; ++k) {
    for (int j = 0; j < users_; ++j) out.push_back((*this)(j, k).adjoint());
  }
  return ChannelSet(users_, std::move(out));
}

// BeamformerSet

void BeamformerSet::check(const NetworkConfig& config) const {
  const auto k_users = static_cast<std::size_t>(config.users());
  if (transmit.size() != k_users || receive.size() != k_users) {
    throw ConfigError("beamformer set user count does not match the configuration");
  }
  for (std::size_t k = 0; k < k_users; ++k) {
    const int kk = static_cast<int>(k);
    if (transmit[k].rows() != config.tx_antennas[k] || transmit[k].cols() != config.streams[k]) {
      throw ConfigError(user_tag(kk) + ": precoder has wrong dimensions");
    }
    if (receive[k].rows() != config.rx_antennas[k] || receive[k].cols() != config.streams[k]) {
      throw ConfigError(user_tag(kk) + ": receive filter has wrong dimensions");
    }
    for (Eigen::Index l = 0; l < transmit[k].cols(); ++l) {
      if (std::abs(transmit[k].col(l).norm() - 1.0) > 1e-12 || std::abs(receive[k].col(l).norm() - 1.0) > 1e-12) {
        throw ConfigError(user_tag(kk) + ": beamformer columns must have unit norm");
      }
    }
  }
}

// PowerAllocation

PowerAllocation::PowerAllocation(const NetworkConfig& config) {
  config.validate();
  budget_ = config.power_budget;
  for (int d : config.streams) powers_.push_back(Eigen::VectorXd::Zero(d));
}

PowerAllocation PowerAllocation::equal_split(const NetworkConfig& config) {
  PowerAllocation out(config);
  for (std::size_t k = 0; k < out.powers_.size(); ++k) {
    out.powers_[k].setConstant(config.power_budget[k] / static_cast<double>(config.streams[k]));
  }
  return out;
}

PowerAllocation PowerAllocation::from_flat(const NetworkConfig& config, const Eigen::VectorXd& flat) {
  if (flat.size() != config.total_streams()) throw ConfigError("flat power vector has the wrong length");
  PowerAllocation out(config);
  const auto offsets = stream_offsets(config.streams);
  for (int k = 0; k < out.users(); ++k) {
    out.set_user(k, flat.segment(offsets[static_cast<std::size_t>(k)], config.streams[static_cast<std::size_t>(k)]));
  }
  return out;
}

const Eigen::VectorXd& PowerAllocation::user_powers(int user) const {
  if (user < 0 || user >= users()) throw IndexError("user index out of range");
  return powers_[static_cast<std::size_t>(user)];
}

int PowerAllocation::streams(int user) const { return static_cast<int>(user_powers(user).size()); }

double PowerAllocation::operator()(int user, int stream) const {
  const auto& p = user_powers(user);
  if (stream < 0 || stream >= p.size()) throw IndexError("stream index out of range");
  return p[stream];
}

const Eigen::VectorXd& PowerAllocation::user(int user) const { return user_powers(user); }

double PowerAllocation::budget(int user) const {
  user_powers(user);
  return budget_[static_cast<std::size_t>(user)];
}

void PowerAllocation::check_user(int user, const Eigen::VectorXd& powers) const {
  if (powers.size() != user_powers(user).size()) throw ConfigError(user_tag(user) + ": wrong number of stream powers");
  for (double p : powers) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError(user_tag(user) + ": powers must be finite and nonnegative");
  }
  if (powers.sum() > budget_[static_cast<std::size_t>(user)] + kBudgetSlack) {
    throw ConfigError(user_tag(user) + ": powers exceed the budget");
  }
}

void PowerAllocation::set_user(int user, Eigen::VectorXd powers) {
  check_user(user, powers);
  powers_[static_cast<std::size_t>(user)] = std::move(powers);
}

void PowerAllocation::set(int user, int stream, double power) {
  Eigen::VectorXd next = user_powers(user);
  if (stream < 0 || stream >= next.size()) throw IndexError("stream index out of range");
  next[stream] = power;
  set_user(user, std::move(next));
}

Eigen::VectorXd PowerAllocation::flat() const {
  Eigen::Index total = 0;
  for (const auto& p : powers_) total += p.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& p : powers_) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

ChannelSet generate_channels(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  const int k_users = config.users();
  std::vector<CMatrix> blocks;
  blocks.reserve(static_cast<std::size_t>(k_users * k_users));
  for (int k = 0; k < k_users; ++k) {
    for (int j = 0; j < k_users; ++j) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j)}));
      CMatrix h(config.rx_antennas[static_cast<std::size_t>(k)], config.tx_antennas[static_cast<std::size_t>(j)]);
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.cols(); ++c) h(r, c) = rng.complex_normal();
      }
      blocks.push_back(std::move(h));
    }
  }
  return ChannelSet(k_users, std::move(blocks));
}

}  // namespace mimoic
