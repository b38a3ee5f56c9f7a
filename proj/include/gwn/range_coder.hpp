// Byte-oriented range coder (32-bit range, carry propagation through a cached
// byte) over 16-bit quantised CDFs. The coding loop uses integers only, so
// output is identical on every platform for the same symbols and CDFs.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gwn {

inline constexpr int kCdfBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfBits;

// Cumulative frequencies cdf[0] = 0 < cdf[1] < ... < cdf[k] = kCdfTotal for
// symbols offset, offset+1, ..., offset+k-1.
struct QuantizedCdf {
  int offset = 0;
  std::vector<std::uint32_t> cdf;

  std::size_t symbols() const { return cdf.empty() ? 0 : cdf.size() - 1; }
  bool contains(int symbol) const {
    return symbol >= offset && symbol < offset + static_cast<int>(symbols());
  }
};

// Floors the cumulative sums of `pmf` onto the 16-bit grid, then gives every
// empty bin one unit taken from the currently largest bin. Requires
// 1 <= pmf.size() <= kCdfTotal and a non-negative, positive-sum pmf.
QuantizedCdf quantize_cdf(std::span<const double> pmf, int offset);

// Throws std::invalid_argument unless the CDF is a valid coding table.
void check_cdf(const QuantizedCdf& c);

struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;  // always 8 * bytes.size()
};

class RangeEncoder {
 public:
  void encode(std::uint32_t start, std::uint32_t freq);
  void encode_symbol(int symbol, const QuantizedCdf& cdf);
  Bitstream finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool first_ = true;  // the leading byte is always zero and is not stored
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode_symbol(const QuantizedCdf& cdf);
  // True when every input byte has been consumed.
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

// Supplies the CDF for the i-th symbol.
using CdfProvider = std::function<const QuantizedCdf&(std::size_t index)>;

Bitstream encode_symbols(std::span<const int> symbols, const CdfProvider& cdfs);
// Throws std::runtime_error if the stream ends early or has trailing bytes.
std::vector<int> decode_symbols(const Bitstream& bs, const CdfProvider& cdfs, std::size_t n);

}  // namespace gwn
