#include "gwn/rate_distortion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace gwn {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

std::vector<double> flat_source(const JointPmf& j) {
  return {j.probs().begin(), j.probs().end()};
}

}  // namespace

DistortionMatrix::DistortionMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<double> d)
    : rows_(rows), cols_(cols), d_(std::move(d)) {
  if (rows_ == 0 || cols_ == 0) {
    throw ValidationError("DistortionMatrix: empty alphabet");
  }
  if (d_.size() != rows_ * cols_) {
    throw ValidationError("DistortionMatrix: expected " +
                          std::to_string(rows_ * cols_) + " entries");
  }
  for (double v : d_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("DistortionMatrix: entries must be finite and >= 0");
    }
  }
}

DistortionMatrix DistortionMatrix::hamming(std::size_t n) {
  std::vector<double> d(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  return DistortionMatrix(n, n, std::move(d));
}

DistortionMatrix DistortionMatrix::squared_error(
    const std::vector<double>& source_values,
    const std::vector<double>& repro_values) {
  std::vector<double> d;
  d.reserve(source_values.size() * repro_values.size());
  for (double x : source_values)
    for (double z : repro_values) d.push_back((x - z) * (x - z));
  return DistortionMatrix(source_values.size(), repro_values.size(), std::move(d));
}

BASolution blahut_arimoto(std::span<const double> source, std::size_t repro_size,
                          std::span<const double> exponent,
                          std::span<const double> cost, double slope,
                          const BAOptions& opts) {
  const std::size_t nx = source.size();
  const std::size_t nz = repro_size;
  if (exponent.size() != nx * nz) {
    throw std::invalid_argument("blahut_arimoto: exponent table shape mismatch");
  }
  if (!cost.empty() && cost.size() != nx * nz) {
    throw std::invalid_argument("blahut_arimoto: cost table shape mismatch");
  }
  if (!(opts.tol > 0.0)) throw std::invalid_argument("blahut_arimoto: tol must be > 0");

  std::vector<double> q(nz, 1.0 / static_cast<double>(nz));
  std::vector<double> c(nz);
  std::vector<double> log_lambda(nx, 0.0);
  std::vector<double> shift(nx, 0.0);

  // exp(e - row max) is fixed across iterations, so tabulate it once. A row
  // whose mass sits entirely on underflowed entries is recomputed with the
  // shift taken over the support of q instead.
  std::vector<double> table(nx * nz);
  std::vector<double> row_max(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    const double* e = &exponent[x * nz];
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < nz; ++z) m = std::max(m, e[z]);
    row_max[x] = m;
    for (std::size_t z = 0; z < nz; ++z) table[x * nz + z] = std::exp(e[z] - m);
  }
  std::vector<double> scratch(nz);

  // Fills `w` with exp(e(x,.) - shift[x]) and returns sum_z q(z) w(z).
  auto row_weights = [&](std::size_t x, double* w) {
    const double* t = &table[x * nz];
    double norm = 0.0;
    for (std::size_t z = 0; z < nz; ++z) norm += q[z] * t[z];
    if (norm > 1e-250) {
      std::copy(t, t + nz, w);
      shift[x] = row_max[x];
      return norm;
    }
    const double* e = &exponent[x * nz];
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < nz; ++z)
      if (q[z] > 0.0) m = std::max(m, e[z]);
    norm = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
      w[z] = std::exp(e[z] - m);
      norm += q[z] * w[z];
    }
    shift[x] = m;
    return norm;
  };

  auto compute_c = [&]() {
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      const double norm = row_weights(x, scratch.data());
      log_lambda[x] = -(shift[x] + std::log(norm));
      if (source[x] <= 0.0) continue;
      const double w = source[x] / norm;
      for (std::size_t z = 0; z < nz; ++z) c[z] += w * scratch[z];
    }
  };

  BASolution sol;
  int it = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (;;) {
    compute_c();
    double max_log_c = -std::numeric_limits<double>::infinity();
    double mean_log_c = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
      if (c[z] > 0.0) max_log_c = std::max(max_log_c, std::log(c[z]));
      const double qn = q[z] * c[z];
      if (qn > 0.0) mean_log_c += qn * std::log(c[z]);
    }
    gap = max_log_c - mean_log_c;
    if (gap < opts.tol * kLn2 || it >= opts.max_iters) {
      sol.point.converged = gap < opts.tol * kLn2;
      // Final quantities for the current q.
      double expected_exponent = 0.0;
      double expected_cost = 0.0;
      double mean_log_lambda = 0.0;
      sol.conditional.assign(nx * nz, 0.0);
      sol.output.assign(nz, 0.0);
      for (std::size_t x = 0; x < nx; ++x) {
        const double* e = &exponent[x * nz];
        const double norm = row_weights(x, scratch.data());
        for (std::size_t z = 0; z < nz; ++z) {
          const double qzx = q[z] * scratch[z] / norm;
          sol.conditional[x * nz + z] = qzx;
          const double pq = source[x] * qzx;
          sol.output[z] += pq;
          expected_exponent += pq * e[z];
          if (!cost.empty()) expected_cost += pq * cost[x * nz + z];
        }
        mean_log_lambda += source[x] * log_lambda[x];
      }
      const double rate_nats = expected_exponent + mean_log_lambda - mean_log_c;
      const double lb_nats = expected_exponent + mean_log_lambda - max_log_c;
      sol.point.rate = std::max(0.0, rate_nats / kLn2);
      sol.point.lower_bound = lb_nats / kLn2;
      sol.point.distortion = expected_cost;
      sol.point.lagrange_s = slope;
      sol.point.iterations = it;
      if (!std::isfinite(sol.point.rate) || !std::isfinite(sol.point.distortion)) {
        throw NumericalError("blahut_arimoto: non-finite iterate");
      }
      return sol;
    }
    double total = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
      q[z] *= c[z];
      total += q[z];
    }
    for (double& v : q) v /= total;
    ++it;
  }
}

namespace {

void check_slope(double s) {
  if (!(s <= 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument("rate-distortion slope must be finite and <= 0");
  }
}

// Rate-zero end point: all mass on the single reproduction symbol with the
// smallest expected distortion.
RDPoint zero_slope_point(std::span<const double> source, const DistortionMatrix& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < d.cols(); ++z) {
    double e = 0.0;
    for (std::size_t x = 0; x < d.rows(); ++x) e += source[x] * d(x, z);
    best = std::min(best, e);
  }
  RDPoint p;
  p.rate = 0.0;
  p.distortion = best;
  p.lagrange_s = 0.0;
  p.converged = true;
  p.lower_bound = 0.0;
  return p;
}

RDPoint marginal_on(std::span<const double> source, const DistortionMatrix& d,
                    double slope, const BAOptions& opts) {
  if (source.size() != d.rows()) {
    throw ValidationError("distortion matrix rows do not match source alphabet");
  }
  if (slope == 0.0) return zero_slope_point(source, d);
  std::vector<double> expo(d.rows() * d.cols());
  std::vector<double> cost(d.rows() * d.cols());
  for (std::size_t x = 0; x < d.rows(); ++x)
    for (std::size_t z = 0; z < d.cols(); ++z) {
      cost[x * d.cols() + z] = d(x, z);
      expo[x * d.cols() + z] = slope * d(x, z);
    }
  return blahut_arimoto(source, d.cols(), expo, cost, slope, opts).point;
}

}  // namespace

RDPoint ba_marginal(const Pmf& source, const DistortionMatrix& d, double slope_s,
                    const BAOptions& opts) {
  check_slope(slope_s);
  return marginal_on(source.probs(), d, slope_s, opts);
}

JointRDPoint ba_joint(const JointPmf& joint, const DistortionMatrix& d1,
                      const DistortionMatrix& d2, double slope1, double slope2,
                      const BAOptions& opts) {
  check_slope(slope1);
  check_slope(slope2);
  if (joint.rank() != 2) throw ValidationError("ba_joint: expected a 2-axis joint");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  if (d1.rows() != n1 || d2.rows() != n2) {
    throw ValidationError("ba_joint: distortion rows do not match source axes");
  }
  const std::size_t m1 = d1.cols();
  const std::size_t m2 = d2.cols();
  const std::size_t nx = n1 * n2;
  const std::size_t nz = m1 * m2;
  std::vector<double> expo(nx * nz);
  std::vector<double> cost1(nx * nz);
  for (std::size_t x1 = 0; x1 < n1; ++x1)
    for (std::size_t x2 = 0; x2 < n2; ++x2)
      for (std::size_t z1 = 0; z1 < m1; ++z1)
        for (std::size_t z2 = 0; z2 < m2; ++z2) {
          const std::size_t k = (x1 * n2 + x2) * nz + z1 * m2 + z2;
          expo[k] = slope1 * d1(x1, z1) + slope2 * d2(x2, z2);
          cost1[k] = d1(x1, z1);
        }

  const std::vector<double> source = flat_source(joint);
  JointRDPoint out;
  out.slope1 = slope1;
  out.slope2 = slope2;
  out.repro1 = m1;
  out.repro2 = m2;

  if (slope1 == 0.0 && slope2 == 0.0) {
    // Rate zero: pick the constant reproduction pair with least total cost.
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_z = 0;
    for (std::size_t z = 0; z < nz; ++z) {
      double e = 0.0;
      for (std::size_t x = 0; x < nx; ++x)
        e += source[x] * (d1(x / n2, z / m2) + d2(x % n2, z % m2));
      if (e < best) {
        best = e;
        best_z = z;
      }
    }
    out.conditional.assign(nx * nz, 0.0);
    for (std::size_t x = 0; x < nx; ++x) out.conditional[x * nz + best_z] = 1.0;
    for (std::size_t x = 0; x < nx; ++x) {
      out.distortion1 += source[x] * d1(x / n2, best_z / m2);
      out.distortion2 += source[x] * d2(x % n2, best_z % m2);
    }
    out.converged = true;
    return out;
  }

  BASolution sol = blahut_arimoto(source, nz, expo, cost1, slope1, opts);
  out.rate = sol.point.rate;
  out.distortion1 = sol.point.distortion;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z)
      out.distortion2 += source[x] * sol.conditional[x * nz + z] * d2(x % n2, z % m2);
  out.converged = sol.point.converged;
  out.iterations = sol.point.iterations;
  out.lower_bound = sol.point.lower_bound;
  out.conditional = std::move(sol.conditional);
  return out;
}

RDPoint ba_conditional(const JointPmf& joint, const Axes& side_axes,
                       const DistortionMatrix& d, double slope_s,
                       const BAOptions& opts) {
  check_slope(slope_s);
  if (side_axes.empty()) throw std::invalid_argument("ba_conditional: no side axes");
  Axes target;
  for (std::size_t a = 0; a < joint.rank(); ++a)
    if (std::find(side_axes.begin(), side_axes.end(), a) == side_axes.end())
      target.push_back(a);
  if (target.empty()) throw std::invalid_argument("ba_conditional: no target axes");

  Axes order = side_axes;
  order.insert(order.end(), target.begin(), target.end());
  // Marginal over (side..., target...) gives a [side][target] table.
  const std::vector<double> table = joint.marginal_table(order);
  std::size_t n_side = 1;
  for (std::size_t a : side_axes) n_side *= joint.axis_size(a);
  const std::size_t n_target = table.size() / n_side;
  if (d.rows() != n_target) {
    throw ValidationError("ba_conditional: distortion rows do not match target alphabet");
  }

  RDPoint out;
  out.lagrange_s = slope_s;
  out.converged = true;
  std::vector<double> cond(n_target);
  for (std::size_t y = 0; y < n_side; ++y) {
    double py = 0.0;
    for (std::size_t x = 0; x < n_target; ++x) py += table[y * n_target + x];
    if (py <= 0.0) continue;
    for (std::size_t x = 0; x < n_target; ++x) cond[x] = table[y * n_target + x] / py;
    const RDPoint p = marginal_on(cond, d, slope_s, opts);
    out.rate += py * p.rate;
    out.distortion += py * p.distortion;
    out.lower_bound += py * p.lower_bound;
    out.converged = out.converged && p.converged;
    out.iterations = std::max(out.iterations, p.iterations);
  }
  return out;
}

RDCurve sweep_curve(const std::function<RDPoint(double)>& solver,
                    std::vector<double> slopes, double tol) {
  if (slopes.empty()) throw std::invalid_argument("sweep_curve: empty slope list");
  std::sort(slopes.begin(), slopes.end());
  slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());

  std::vector<RDPoint> pts;
  pts.reserve(slopes.size());
  for (double s : slopes) pts.push_back(solver(s));
  std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) {
    if (a.distortion != b.distortion) return a.distortion < b.distortion;
    return a.rate > b.rate;
  });

  RDCurve curve;
  for (const RDPoint& p : pts) {
    if (!curve.points.empty() && p.rate > curve.points.back().rate + tol) continue;
    curve.points.push_back(p);
  }
  return curve;
}

std::string to_csv(const RDCurve& curve) {
  std::string out = "slope,rate_bits,distortion,converged\r\n";
  char buf[128];
  for (const RDPoint& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%s\r\n", p.lagrange_s,
                  p.rate, p.distortion, p.converged ? "true" : "false");
    out += buf;
  }
  return out;
}

double interpolate_rate(const RDCurve& curve, double distortion) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("interpolate_rate: empty curve");
  if (distortion <= pts.front().distortion) return pts.front().rate;
  if (distortion >= pts.back().distortion) return pts.back().rate;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (distortion <= pts[i].distortion) {
      const double span = pts[i].distortion - pts[i - 1].distortion;
      if (span <= 0.0) return pts[i].rate;
      const double t = (distortion - pts[i - 1].distortion) / span;
      return pts[i - 1].rate + t * (pts[i].rate - pts[i - 1].rate);
    }
  }
  return pts.back().rate;
}

}  // namespace gwn
