#include "gwn/channel_coding.hpp"

#include <cmath>
#include <stdexcept>

#include "gwn/pmf.hpp"

namespace gwn {
namespace {

constexpr char kMagic[4] = {'G', 'W', 'N', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ValidationError("container: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

void check_model(const Tensor& codes, const ChannelModel& m) {
  if (!codes.same_shape(m.mean) || !codes.same_shape(m.scale)) {
    throw std::invalid_argument("channel coding: codes " + codes.shape_string() +
                                " and model " + m.mean.shape_string() + " differ in shape");
  }
}

}  // namespace

QuantizedCdf latent_cdf(double mean, double scale) {
  if (!(scale > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("latent_cdf: need finite mean and positive scale");
  }
  constexpr int k = 2 * kSymbolBound + 1;
  double pmf[k];
  for (int i = 0; i < k; ++i) pmf[i] = gaussian_mass(i - kSymbolBound, mean, scale);
  // Tails beyond the clamp range belong to the end symbols.
  pmf[0] += 0.5 * std::erfc((mean - (0.5 - kSymbolBound)) / (scale * std::sqrt(2.0)));
  pmf[k - 1] += 0.5 * std::erfc(((kSymbolBound + 0.5) - mean) / (scale * std::sqrt(2.0)));
  return quantize_cdf(std::span<const double>(pmf, k), -kSymbolBound);
}

Bitstream encode_channel(const Tensor& codes, const ChannelModel& model) {
  check_model(codes, model);
  RangeEncoder enc;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const double v = codes[i];
    if (v != std::round(v)) throw std::invalid_argument("encode_channel: non-integer code");
    enc.encode_symbol(static_cast<int>(v), latent_cdf(model.mean[i], model.scale[i]));
  }
  return enc.finish();
}

Tensor decode_channel(const Bitstream& bs, const ChannelModel& model) {
  Tensor out(model.mean.shape());
  RangeDecoder dec(bs.bytes);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = dec.decode_symbol(latent_cdf(model.mean[i], model.scale[i]));
  if (!dec.exhausted()) throw std::runtime_error("decode_channel: trailing bytes in payload");
  return out;
}

std::vector<std::uint8_t> encode_container(GwnCodec& codec, const ChannelCodes& codes,
                                           ContainerStats* stats) {
  std::size_t n = 0;
  for (const Tensor* t : {&codes.y0, &codes.y1, &codes.y2})
    if (t->size() > 0) n = t->rows();
  if (n == 0) throw std::invalid_argument("encode_container: no codes to encode");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  ContainerStats st;
  st.header_bits = 32;
  const Tensor* chans[3] = {&codes.y0, &codes.y1, &codes.y2};
  for (int c = 0; c < 3; ++c) {
    const Tensor& y = *chans[c];
    const std::size_t w = codec.channel_width(c);
    if (w == 0) {
      if (y.size() != 0) throw std::invalid_argument("encode_container: codes for an absent channel");
      put_u32(out, 0);
      put_u32(out, 0);
      st.header_bits += 64;
      continue;
    }
    if (y.rank() != 2 || y.rows() != n || y.cols() != w) {
      throw std::invalid_argument("encode_container: channel " + std::to_string(c) +
                                  " has shape " + y.shape_string());
    }
    const Bitstream bs = encode_channel(y, codec.channel_model(c, codes.y0, n));
    put_u32(out, static_cast<std::uint32_t>(y.size()));
    put_u32(out, static_cast<std::uint32_t>(bs.bytes.size()));
    out.insert(out.end(), bs.bytes.begin(), bs.bytes.end());
    st.header_bits += 64;
    st.payload_bits[c] = bs.bit_length;
  }
  if (stats) *stats = st;
  return out;
}

ChannelCodes decode_container(GwnCodec& codec, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ValidationError("container: missing GWN1 magic");
  }
  std::size_t pos = 4;
  ChannelCodes out;
  Tensor* chans[3] = {&out.y0, &out.y1, &out.y2};
  std::size_t n = 0;
  for (int c = 0; c < 3; ++c) {
    const std::uint32_t count = get_u32(bytes, pos);
    const std::uint32_t len = get_u32(bytes, pos);
    const std::size_t w = codec.channel_width(c);
    if (w == 0) {
      if (count != 0 || len != 0) throw ValidationError("container: data for an absent channel");
      continue;
    }
    if (count % w != 0) throw ValidationError("container: symbol count not a multiple of width");
    if (n == 0) n = count / w;
    if (count / w != n || n == 0) throw ValidationError("container: channels disagree on rows");
    if (pos + len > bytes.size()) throw ValidationError("container: truncated payload");
    Bitstream bs;
    bs.bytes.assign(bytes.begin() + pos, bytes.begin() + pos + len);
    bs.bit_length = 8 * bs.bytes.size();
    pos += len;
    *chans[c] = decode_channel(bs, codec.channel_model(c, out.y0, n));
  }
  if (pos != bytes.size()) throw ValidationError("container: trailing bytes");
  return out;
}

}  // namespace gwn
