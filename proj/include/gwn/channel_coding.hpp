// Range coding of a codec's quantised latents and the GWN1 container:
// "GWN1", then for Y0, Y1, Y2 in turn a u32 symbol count, a u32 payload byte
// length and the payload (all integers little-endian).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwn/codec.hpp"
#include "gwn/range_coder.hpp"

namespace gwn {

// Coding table for one latent element: the discretised Gaussian over
// [-kSymbolBound, kSymbolBound] with both tails folded into the end bins.
// Encoder and decoder both call this, so their tables agree bit for bit.
QuantizedCdf latent_cdf(double mean, double scale);

Bitstream encode_channel(const Tensor& codes, const ChannelModel& model);
Tensor decode_channel(const Bitstream& bs, const ChannelModel& model);

struct ContainerStats {
  std::size_t payload_bits[3] = {0, 0, 0};
  std::size_t header_bits = 0;
  std::size_t total_bits() const {
    return header_bits + payload_bits[0] + payload_bits[1] + payload_bits[2];
  }
};

// Codes every present channel of `codes` (n rows) under the codec's models.
std::vector<std::uint8_t> encode_container(GwnCodec& codec, const ChannelCodes& codes,
                                           ContainerStats* stats = nullptr);
// Decodes Y0 first, then Y1 and Y2 under models conditioned on it.
ChannelCodes decode_container(GwnCodec& codec, const std::vector<std::uint8_t>& bytes);

}  // namespace gwn
