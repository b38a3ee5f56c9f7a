// Synthetic correlated sources: a two-channel integer source whose positions
// are either copies or independent draws, with linear regression targets, and
// labelled attribute sources (digit, colour) with a configurable label joint.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwn/pmf.hpp"
#include "gwn/rng.hpp"

namespace gwn {

inline constexpr int kSymbolMin = -4;
inline constexpr int kSymbolMax = 4;
inline constexpr std::size_t kSymbolCount = 9;

// Symbol PMF on {-4..4}: a zero-mean Gaussian integrated over unit-width
// bins, with the tails folded into the boundary bins.
Pmf build_base_pmf(double variance = 4.0);

// Variance whose base PMF has the requested entropy (bisection).
double variance_for_entropy(double target_bits);

struct SyntheticSourceSpec {
  std::size_t height = 4;
  std::size_t width = 4;
  double copy_prob = 0.8;
  double variance = 4.0;
  // Side of the square blocks the target matrices act on; 0 => height*width.
  std::size_t block = 0;
  std::uint64_t seed = 1;
};

void validate(const SyntheticSourceSpec& spec);

// Per-position copy flags, frozen at construction.
class DependencyMap {
 public:
  DependencyMap(const SyntheticSourceSpec& spec);
  DependencyMap(std::vector<bool> copy) : copy_(std::move(copy)) {}

  std::size_t size() const { return copy_.size(); }
  bool is_copy(std::size_t pos) const { return copy_[pos]; }
  double copy_fraction() const;
  const std::vector<bool>& flags() const { return copy_; }

 private:
  std::vector<bool> copy_;
};

// Square matrices with determinant exactly 1, built as unit-lower times
// unit-upper triangular factors. Applied blockwise to a flattened channel.
class TargetMap {
 public:
  TargetMap(std::size_t block, Rng rng);

  std::size_t block() const { return block_; }
  const std::vector<double>& matrix() const { return a_; }  // row-major

  // z = A x on consecutive blocks; x.size() must be a multiple of block.
  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> invert(const std::vector<double>& z) const;

 private:
  std::size_t block_;
  std::vector<double> lower_;  // unit diagonal implied
  std::vector<double> upper_;
  std::vector<double> a_;
};

struct SyntheticBatch {
  std::size_t n = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  // [n][height*width] each, symbol values and regression targets.
  std::vector<double> x1, x2, z1, z2;
};

struct SourceMeasures {
  double h_joint = 0.0;  // H(X1,X2) per element position
  double h_sum = 0.0;    // H(X1) + H(X2)
  double mi = 0.0;       // I(X1;X2)
};

class SyntheticSource {
 public:
  explicit SyntheticSource(const SyntheticSourceSpec& spec);

  const SyntheticSourceSpec& spec() const { return spec_; }
  const Pmf& base_pmf() const { return base_; }
  const DependencyMap& dependency_map() const { return map_; }
  const TargetMap& target1() const { return t1_; }
  const TargetMap& target2() const { return t2_; }

  // Deterministic in (seed, batch_index).
  SyntheticBatch sample_batch(std::size_t n, std::uint64_t batch_index) const;

  SourceMeasures theoretical_measures() const;

 private:
  SyntheticSourceSpec spec_;
  Pmf base_;
  DependencyMap map_;
  TargetMap t1_;
  TargetMap t2_;
  std::vector<double> cdf_;
};

// Per-element measures of a copy/independent mixture over a given map.
SourceMeasures theoretical_measures(const Pmf& base, const DependencyMap& map);

enum class AttributeKind { kDependent, kIndependent, kMixture };

AttributeKind attribute_kind_from_string(const std::string& s);
std::string to_string(AttributeKind k);

struct AttributePmfSpec {
  AttributeKind kind = AttributeKind::kDependent;
  std::size_t embedding_dim = 20;
  double noise_scale = 0.1;
  std::uint64_t seed = 1;
  double target_joint_entropy = 5.12;  // mixture only
  double target_mi = 1.4;              // mixture only
  double mixture_tol = 0.05;
};

inline constexpr std::size_t kAttributeClasses = 10;

// Label joint over (digit, colour). The mixture assigns each digit a subset
// of colours with uniform weight, found by local search on the subsets.
JointPmf build_attribute_joint(const AttributePmfSpec& spec);

struct AttributeBatch {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> input;  // [n][dim]
  std::vector<int> digit;
  std::vector<int> color;
};

class AttributeSource {
 public:
  explicit AttributeSource(const AttributePmfSpec& spec);

  const AttributePmfSpec& spec() const { return spec_; }
  const JointPmf& joint() const { return joint_; }
  AttributeBatch sample_batch(std::size_t n, std::uint64_t batch_index) const;

 private:
  AttributePmfSpec spec_;
  JointPmf joint_;
  std::vector<double> cdf_;
};

// Nearest-one-hot decoding of an attribute vector.
std::pair<int, int> decode_attributes(const double* vec);

}  // namespace gwn
