#pragma once

// Line-oriented text format for channel grids and beamformer sets.
//
//   mimoic-channels 1
//   users K
//   block <rx> <tx> <rows> <cols>
//   real <rows*cols hex floats, row-major>
//   imag <rows*cols hex floats, row-major>
//   ...
//
// Beamformer files use the header `mimoic-beamformers 1` and `transmit <k>
// <rows> <cols>` / `receive <k> <rows> <cols>` sections. Indices are 1-based.
// Values are written as C99 hexadecimal floats, so a round trip is exact.

#include <filesystem>
#include <iosfwd>

#include "mimoic/network.hpp"

namespace mimoic {

void write_channels(std::ostream& out, const ChannelSet& channels);
ChannelSet read_channels(std::istream& in);

void write_beamformers(std::ostream& out, const BeamformerSet& beamformers);
BeamformerSet read_beamformers(std::istream& in);

void save_channels(const std::filesystem::path& path, const ChannelSet& channels);
ChannelSet load_channels(const std::filesystem::path& path);
void save_beamformers(const std::filesystem::path& path, const BeamformerSet& beamformers);
BeamformerSet load_beamformers(const std::filesystem::path& path);

}  // namespace mimoic
