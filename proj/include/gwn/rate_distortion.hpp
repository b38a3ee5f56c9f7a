// Blahut-Arimoto solvers for marginal, joint and conditional rate-distortion
// functions. Points are parameterised by the Lagrange slope s <= 0: the test
// channel is Q(z|x) ~ q(z) exp(s d(x,z)) with s in nats per distortion unit.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gwn/pmf.hpp"

namespace gwn {

// Non-negative distortion table indexed (source symbol, reproduction symbol).
class DistortionMatrix {
 public:
  DistortionMatrix(std::size_t rows, std::size_t cols, std::vector<double> d);

  static DistortionMatrix hamming(std::size_t n);
  // (x - z)^2 on symbol values; reproduction values default to the source's.
  static DistortionMatrix squared_error(const std::vector<double>& source_values,
                                        const std::vector<double>& repro_values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t x, std::size_t z) const { return d_[x * cols_ + z]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> d_;
};

struct RDPoint {
  double rate = 0.0;        // bits per source symbol
  double distortion = 0.0;  // expected distortion, task-loss units
  double lagrange_s = 0.0;
  bool converged = false;
  int iterations = 0;
  // Shannon-lower-bound certificate: rate - lower_bound <= tol on convergence.
  double lower_bound = 0.0;
};

struct BAOptions {
  double tol = 1e-9;  // certificate gap in bits
  int max_iters = 50'000;
};

// Full Blahut-Arimoto solution on a flattened source.
struct BASolution {
  RDPoint point;
  std::vector<double> output;       // q(z)
  std::vector<double> conditional;  // Q(z|x), row-major [x][z]
};

// Generic solver: minimises I(X;Z) - sum_x,z p(x)Q(z|x) * exponent(x,z)
// where `exponent` holds s*d(x,z) (<= 0). Returns rate in bits and the
// achieved E[cost] with `cost` supplied separately for reporting.
BASolution blahut_arimoto(std::span<const double> source,
                          std::size_t repro_size,
                          std::span<const double> exponent,
                          std::span<const double> cost, double slope,
                          const BAOptions& opts);

RDPoint ba_marginal(const Pmf& source, const DistortionMatrix& d, double slope_s,
                    const BAOptions& opts = {});

struct JointRDPoint {
  double rate = 0.0;
  double distortion1 = 0.0;
  double distortion2 = 0.0;
  double slope1 = 0.0;
  double slope2 = 0.0;
  bool converged = false;
  int iterations = 0;
  double lower_bound = 0.0;
  // P(z1,z2 | x1,x2), row-major [(x1,x2)][(z1,z2)].
  std::vector<double> conditional;
  std::size_t repro1 = 0;
  std::size_t repro2 = 0;
};

// Joint RD of a 2-axis source with per-task distortions d1 on axis 0 and d2
// on axis 1; reproduction alphabet is repro1 x repro2.
JointRDPoint ba_joint(const JointPmf& joint, const DistortionMatrix& d1,
                      const DistortionMatrix& d2, double slope1, double slope2,
                      const BAOptions& opts = {});

// Conditional RD of the non-side axes given `side_axes`, known at both ends.
// Solved as one BA problem per side symbol and averaged by its marginal.
RDPoint ba_conditional(const JointPmf& joint, const Axes& side_axes,
                       const DistortionMatrix& d, double slope_s,
                       const BAOptions& opts = {});

struct RDCurve {
  std::vector<RDPoint> points;  // sorted by distortion ascending
};

// Evaluates `solver` at every distinct slope and assembles a curve sorted by
// distortion. Points whose rate exceeds a lower-distortion point's by more
// than `tol` (a monotonicity violation) are dropped.
RDCurve sweep_curve(const std::function<RDPoint(double)>& solver,
                    std::vector<double> slopes, double tol = 1e-6);

// CSV with header `slope,rate_bits,distortion,converged`.
std::string to_csv(const RDCurve& curve);

// Rate of the curve at `distortion` by linear interpolation; clamps to the
// end points outside the sampled range.
double interpolate_rate(const RDCurve& curve, double distortion);

}  // namespace gwn
