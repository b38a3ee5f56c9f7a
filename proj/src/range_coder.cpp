#include "gwn/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gwn {
namespace {

constexpr std::uint32_t kTop = 1u << 24;

}  // namespace

QuantizedCdf quantize_cdf(std::span<const double> pmf, int offset) {
  const std::size_t k = pmf.size();
  if (k == 0 || k > kCdfTotal) throw std::invalid_argument("quantize_cdf: bad alphabet size");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("quantize_cdf: negative or non-finite mass");
    }
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("quantize_cdf: zero total mass");

  std::vector<std::uint32_t> freq(k);
  double acc = 0.0;
  std::uint32_t prev = 0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += pmf[i];
    std::uint32_t c = i + 1 == k ? kCdfTotal
                                 : static_cast<std::uint32_t>(
                                       std::min<double>(std::floor(acc / total * kCdfTotal),
                                                        kCdfTotal));
    c = std::max(c, prev);
    freq[i] = c - prev;
    prev = c;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (freq[i] != 0) continue;
    const auto big = std::max_element(freq.begin(), freq.end());
    --*big;
    freq[i] = 1;
  }
  QuantizedCdf out;
  out.offset = offset;
  out.cdf.resize(k + 1);
  out.cdf[0] = 0;
  for (std::size_t i = 0; i < k; ++i) out.cdf[i + 1] = out.cdf[i] + freq[i];
  return out;
}

void check_cdf(const QuantizedCdf& c) {
  if (c.cdf.size() < 2 || c.cdf.front() != 0 || c.cdf.back() != kCdfTotal) {
    throw std::invalid_argument("cdf must start at 0 and end at 2^16");
  }
  for (std::size_t i = 1; i < c.cdf.size(); ++i)
    if (c.cdf[i] <= c.cdf[i - 1]) throw std::invalid_argument("cdf must be strictly increasing");
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      if (first_) {
        first_ = false;
      } else {
        out_.push_back(static_cast<std::uint8_t>(temp + carry));
      }
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(std::uint32_t start, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kCdfBits;
  low_ += static_cast<std::uint64_t>(start) * r;
  range_ = freq * r;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(int symbol, const QuantizedCdf& cdf) {
  if (!cdf.contains(symbol)) {
    throw std::invalid_argument("range coder: symbol " + std::to_string(symbol) +
                                " outside the CDF support [" + std::to_string(cdf.offset) + ", " +
                                std::to_string(cdf.offset + static_cast<int>(cdf.symbols()) - 1) +
                                "]");
  }
  const auto s = static_cast<std::size_t>(symbol - cdf.offset);
  const std::uint32_t freq = cdf.cdf[s + 1] - cdf.cdf[s];
  if (freq == 0) throw std::invalid_argument("range coder: symbol has zero frequency");
  encode(cdf.cdf[s], freq);
}

Bitstream RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  Bitstream bs;
  bs.bytes = std::move(out_);
  bs.bit_length = 8 * bs.bytes.size();
  out_.clear();
  return bs;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw std::runtime_error("range decoder: truncated bitstream");
  return bytes_[pos_++];
}

int RangeDecoder::decode_symbol(const QuantizedCdf& cdf) {
  const std::uint32_t r = range_ >> kCdfBits;
  const std::uint32_t target = std::min(code_ / r, kCdfTotal - 1);
  const auto it = std::upper_bound(cdf.cdf.begin(), cdf.cdf.end(), target);
  if (it == cdf.cdf.begin() || it == cdf.cdf.end()) {
    throw std::runtime_error("range decoder: corrupt bitstream");
  }
  const auto s = static_cast<std::size_t>(it - cdf.cdf.begin()) - 1;
  code_ -= cdf.cdf[s] * r;
  range_ = (cdf.cdf[s + 1] - cdf.cdf[s]) * r;
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return cdf.offset + static_cast<int>(s);
}

Bitstream encode_symbols(std::span<const int> symbols, const CdfProvider& cdfs) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode_symbol(symbols[i], cdfs(i));
  return enc.finish();
}

std::vector<int> decode_symbols(const Bitstream& bs, const CdfProvider& cdfs, std::size_t n) {
  RangeDecoder dec(bs.bytes);
  std::vector<int> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dec.decode_symbol(cdfs(i)));
  if (!dec.exhausted()) throw std::runtime_error("range decoder: trailing bytes after last symbol");
  return out;
}

}  // namespace gwn
