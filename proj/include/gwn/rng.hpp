// Deterministic splittable random streams. A stream is identified by a key;
// split() derives child keys, so one master seed fans out to independent
// sub-streams without shared state. Distributions are implemented here rather
// than taken from <random> so results are identical across standard libraries.
#pragma once

#include <cstdint>
#include <vector>

namespace gwn {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  // Child stream; independent of this one and of other ids.
  Rng split(std::uint64_t id) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p);
  // Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);
  std::vector<double> dirichlet(std::size_t n, double concentration);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gwn
