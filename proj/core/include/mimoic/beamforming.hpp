#pragma once

// Per-substream covariances, SINR, and alternating max-SINR beamformer design.

#include <cstdint>
#include <vector>

#include "mimoic/network.hpp"

namespace mimoic {

/// Covariances seen by receiver k for its substream l.
struct CovarianceBundle {
  CMatrix signal;              // R = p_{k,l} H_kk u u^H H_kk^H
  CMatrix unit_signal;         // R' = H_kk u u^H H_kk^H
  CMatrix interference;        // Q: all other substreams, including user k's own
  CMatrix interference_noise;  // B = Q + I
};

/// Sum over all transmitters of H_kj U_j P_j U_j^H H_kj^H at receiver k.
CMatrix received_covariance(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k);

CovarianceBundle covariances(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k,
                             int l);

/// v^H R v / v^H B v for substream (k, l). Throws DegenerateStreamError for a
/// zero receive filter.
double sinr(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw, int k, int l);

/// SINR of every substream.
StreamTable all_sinrs(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw);

/// B^{-1} h normalized to unit length: the filter maximizing
/// |w^H h|^2 / (w^H B w). B must be Hermitian positive definite.
CVector mmse_receive_filter(const CMatrix& B, const CVector& h_eff);

/// Unit-norm receive filters for every substream, all computed against the
/// current precoders and powers.
std::vector<CMatrix> receive_filters(const ChannelSet& channels, const BeamformerSet& bf, const PowerAllocation& pw);

/// Random unit-norm columns for every precoder and receive filter.
BeamformerSet random_beamformers(const NetworkConfig& config, std::uint64_t seed);

struct MaxSinrDesign {
  BeamformerSet beamformers;
  /// Forward-network SINRs after each alternation (one entry per iteration).
  std::vector<StreamTable> sinr_trace;
};

/// Alternating max-SINR design with equal per-substream design power.
///
/// Starts from random_beamformers(config, init_seed). Each of the
/// config.bf_iters alternations first recomputes every receive filter on the
/// forward network, then every precoder as the receive filter of the
/// reciprocal network (channels conjugate-transposed, precoders and filters
/// exchanged).
MaxSinrDesign max_sinr_design(const ChannelSet& channels, const NetworkConfig& config, std::uint64_t init_seed);

BeamformerSet max_sinr_alternate(const ChannelSet& channels, const NetworkConfig& config, std::uint64_t init_seed);

/// Reorders each user's precoder/filter column pairs so that the given
/// SINRs are ascending within the user (stable for ties). `sinrs` is permuted
/// alongside.
void sort_streams_by_sinr(BeamformerSet& bf, StreamTable& sinrs);

}  // namespace mimoic
