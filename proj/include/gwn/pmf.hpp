// Dense discrete probability tables and the information functionals built on
// them. All logarithms are base 2, so every returned quantity is in bits.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwn {

// Raised when an input violates a documented invariant (bad mass, bad shape).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an iterative routine fails numerically (NaN, divergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMassTolerance = 1e-12;
// Probabilities below this are treated as exact zeros inside logarithms.
inline constexpr double kLogFloor = 1e-15;
inline constexpr std::size_t kMaxCells = 10'000'000;
inline constexpr std::size_t kMinAxes = 2;
inline constexpr std::size_t kMaxAxes = 5;

using Axes = std::vector<std::size_t>;

// Single-variable probability mass function.
class Pmf {
 public:
  explicit Pmf(std::vector<double> probs);

  // Normalises arbitrary non-negative weights.
  static Pmf from_weights(std::vector<double> weights);
  static Pmf uniform(std::size_t n);
  static Pmf point_mass(std::size_t n, std::size_t at);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Dense N-axis joint table (2 <= N <= 5) stored row-major, last axis fastest.
class JointPmf {
 public:
  JointPmf(std::vector<std::size_t> axis_sizes, std::vector<double> probs);

  static JointPmf from_weights(std::vector<std::size_t> axis_sizes,
                               std::vector<double> weights);
  // Outer product of two marginals.
  static JointPmf product(const Pmf& a, const Pmf& b);

  std::size_t rank() const { return sizes_.size(); }
  std::span<const std::size_t> axis_sizes() const { return sizes_; }
  std::size_t axis_size(std::size_t axis) const { return sizes_.at(axis); }
  std::size_t cell_count() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }

  double at(std::span<const std::size_t> index) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  // Table of the marginal over `keep` (in the order given). The result is a
  // flat row-major table whose shape is the kept axis sizes.
  std::vector<double> marginal_table(const Axes& keep) const;
  Pmf marginal(std::size_t axis) const;
  // Marginal over two or more axes, as a JointPmf.
  JointPmf marginal_joint(const Axes& keep) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> probs_;
};

// Entropy of a flat probability vector; entries below kLogFloor contribute 0.
double entropy_of(std::span<const double> probs);

double entropy(const Pmf& p);
double entropy(const JointPmf& j);
// H of the listed axes of `j`.
double joint_entropy(const JointPmf& j, const Axes& axes);
// H(target | given) = H(target, given) - H(given).
double conditional_entropy(const JointPmf& j, const Axes& target,
                           const Axes& given);
double mutual_information(const JointPmf& j, const Axes& a, const Axes& b);
double conditional_mutual_information(const JointPmf& j, const Axes& a,
                                      const Axes& b, const Axes& given);
// I(A;B;C) = I(A;B) - I(A;B|C). May be negative.
double interaction_information(const JointPmf& j, const Axes& a, const Axes& b,
                               const Axes& c);

double binary_entropy(double p);

// Text serialisation: "axes: s1 s2 ..." then one probability per line.
std::string to_text(const JointPmf& j);
JointPmf joint_from_text(const std::string& text);

}  // namespace gwn
