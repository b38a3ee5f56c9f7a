#include <cmath>

#include "doctest.h"
#include "gwn/range_coder.hpp"
#include "gwn/rng.hpp"

using namespace gwn;

namespace {

double ideal_bits(const std::vector<int>& symbols, const QuantizedCdf& c) {
  double bits = 0.0;
  for (int s : symbols) {
    const auto k = static_cast<std::size_t>(s - c.offset);
    bits -= std::log2(static_cast<double>(c.cdf[k + 1] - c.cdf[k]) / kCdfTotal);
  }
  return bits;
}

}  // namespace

TEST_CASE("uniform four-ary symbols cost two bits each") {
  const std::vector<double> pmf(4, 0.25);
  const QuantizedCdf c = quantize_cdf(pmf, 0);
  std::vector<int> sym(1000);
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = static_cast<int>(i * 7 % 4);
  const Bitstream bs = encode_symbols(sym, [&](std::size_t) -> const QuantizedCdf& { return c; });
  CHECK(bs.bit_length == 2032);
  CHECK(decode_symbols(bs, [&](std::size_t) -> const QuantizedCdf& { return c; }, sym.size()) ==
        sym);
}

TEST_CASE("quantised cdf keeps every symbol codable") {
  const std::vector<double> pmf = {1e-12, 0.5, 1e-9, 0.5 - 2e-9, 0.0};
  const QuantizedCdf c = quantize_cdf(pmf, -2);
  CHECK_NOTHROW(check_cdf(c));
  for (std::size_t k = 0; k < c.symbols(); ++k) CHECK(c.cdf[k + 1] > c.cdf[k]);
  CHECK(c.contains(-2));
  CHECK(c.contains(2));
  CHECK_FALSE(c.contains(3));
  CHECK_THROWS(quantize_cdf(std::vector<double>{-0.1, 1.1}, 0));
}

TEST_CASE("random streams round trip within 40 bits of the ideal length") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.below(60);
    const QuantizedCdf c = quantize_cdf(rng.dirichlet(k, 0.3), -static_cast<int>(k / 2));
    const std::size_t n = 1 + rng.below(3000);
    std::vector<int> sym(n);
    for (auto& s : sym) {
      const auto u = static_cast<std::uint32_t>(rng.below(kCdfTotal));
      std::size_t j = 0;
      while (c.cdf[j + 1] <= u) ++j;
      s = c.offset + static_cast<int>(j);
    }
    const auto prov = [&](std::size_t) -> const QuantizedCdf& { return c; };
    const Bitstream bs = encode_symbols(sym, prov);
    CHECK(decode_symbols(bs, prov, n) == sym);
    CHECK(static_cast<double>(bs.bit_length) <= ideal_bits(sym, c) + 40.0);
  }
}

TEST_CASE("streams are deterministic") {
  const QuantizedCdf c = quantize_cdf(std::vector<double>{0.1, 0.2, 0.7}, 0);
  const std::vector<int> sym = {2, 2, 0, 1, 2, 0, 0, 2};
  const auto prov = [&](std::size_t) -> const QuantizedCdf& { return c; };
  CHECK(encode_symbols(sym, prov).bytes == encode_symbols(sym, prov).bytes);
}

TEST_CASE("truncated and padded streams are detected") {
  const QuantizedCdf c = quantize_cdf(std::vector<double>{0.3, 0.3, 0.4}, 0);
  std::vector<int> sym(200);
  for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = static_cast<int>(i % 3);
  const auto prov = [&](std::size_t) -> const QuantizedCdf& { return c; };
  Bitstream bs = encode_symbols(sym, prov);
  Bitstream cut = bs;
  cut.bytes.resize(cut.bytes.size() - 3);
  CHECK_THROWS(decode_symbols(cut, prov, sym.size()));
  Bitstream pad = bs;
  pad.bytes.push_back(0);
  CHECK_THROWS(decode_symbols(pad, prov, sym.size()));
}

TEST_CASE("symbols outside the table are rejected") {
  const QuantizedCdf c = quantize_cdf(std::vector<double>{0.5, 0.5}, 0);
  RangeEncoder enc;
  CHECK_THROWS(enc.encode_symbol(2, c));
}
