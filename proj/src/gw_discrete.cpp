#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gwn/common_info.hpp"
#include "gwn/rng.hpp"

namespace gwn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-12;

// Canonical labelings (restricted growth strings) of `n` items with at most
// `k` labels: each label is at most one more than the largest seen so far.
// Relabelings of the same partition give the same objective, so only one
// representative per partition is visited.
std::vector<std::vector<int>> canonical_labelings(std::size_t n, std::size_t k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t pos, int top) -> void {
    if (pos == n) {
      out.push_back(cur);
      return;
    }
    const int limit = std::min<int>(top + 1, static_cast<int>(k) - 1);
    for (int v = 0; v <= limit; ++v) {
      cur[pos] = v;
      self(self, pos + 1, std::max(top, v));
    }
  };
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  rec(rec, 0, -1);
  return out;
}

double count_labelings(std::size_t n, std::size_t k) {
  // Sum of Stirling numbers S(n, j) for j <= k.
  std::vector<double> row(k + 1, 0.0);
  row[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, k); j >= 1; --j) row[j] = j * row[j] + row[j - 1];
    row[0] = 0.0;
  }
  double total = 0.0;
  for (double v : row) total += v;
  return total;
}

struct Problem {
  std::size_t n1, n2, m1, m2;
  std::vector<double> p;
  std::vector<std::size_t> cells;  // support cells
  std::vector<std::size_t> live1, live2;
  const DistortionMatrix* d1;
  const DistortionMatrix* d2;
  AlphabetSizes sizes;
};

// Side evaluation for one task given f0 (over all cells) and fi (over
// symbols of that task): H(Yi|Y0), the optimal decoder and its distortion.
struct SideEval {
  double h_cond = 0.0;
  double distortion = 0.0;
  std::vector<int> decoder;  // [y0][yi]
};

SideEval eval_side(const Problem& pr, const std::vector<int>& f0,
                   const std::vector<int>& fi, bool first, double h_y0) {
  const std::size_t ny = first ? pr.sizes.y1 : pr.sizes.y2;
  const std::size_t m = first ? pr.m1 : pr.m2;
  const DistortionMatrix& d = first ? *pr.d1 : *pr.d2;
  const std::size_t y0n = pr.sizes.y0;
  std::vector<double> pj(y0n * ny, 0.0);
  std::vector<double> cost(y0n * ny * m, 0.0);
  for (std::size_t c : pr.cells) {
    const std::size_t x1 = c / pr.n2;
    const std::size_t x2 = c % pr.n2;
    const std::size_t x = first ? x1 : x2;
    const std::size_t cell = static_cast<std::size_t>(f0[c]) * ny + fi[x];
    pj[cell] += pr.p[c];
    for (std::size_t z = 0; z < m; ++z) cost[cell * m + z] += pr.p[c] * d(x, z);
  }
  SideEval out;
  out.h_cond = std::max(0.0, entropy_of(pj) - h_y0);
  out.decoder.assign(y0n * ny, 0);
  for (std::size_t cell = 0; cell < y0n * ny; ++cell) {
    double best = kInf;
    for (std::size_t z = 0; z < m; ++z)
      if (cost[cell * m + z] < best) {
        best = cost[cell * m + z];
        out.decoder[cell] = static_cast<int>(z);
      }
    out.distortion += best;
  }
  return out;
}

double h_y0_of(const Problem& pr, const std::vector<int>& f0) {
  std::vector<double> p0(pr.sizes.y0, 0.0);
  for (std::size_t c : pr.cells) p0[f0[c]] += pr.p[c];
  return entropy_of(p0);
}

std::vector<int> expand(const std::vector<std::size_t>& live, std::size_t n,
                        const std::vector<int>& labels) {
  std::vector<int> full(n, 0);
  for (std::size_t i = 0; i < live.size(); ++i) full[live[i]] = labels[i];
  return full;
}

[[noreturn]] void infeasible(bool any1, bool any2, double D1, double D2) {
  char buf[160];
  if (!any1 && !any2) {
    std::snprintf(buf, sizeof(buf),
                  "distortion constraints D1 <= %g and D2 <= %g are infeasible", D1, D2);
  } else if (!any1) {
    std::snprintf(buf, sizeof(buf), "distortion constraint D1 <= %g is infeasible", D1);
  } else if (!any2) {
    std::snprintf(buf, sizeof(buf), "distortion constraint D2 <= %g is infeasible", D2);
  } else {
    std::snprintf(buf, sizeof(buf),
                  "distortion constraints D1 <= %g and D2 <= %g cannot hold together", D1, D2);
  }
  throw ValidationError(buf);
}

}  // namespace

GWDiscreteResult gw_objective_discrete(const JointPmf& joint, const DistortionMatrix& d1,
                                       const DistortionMatrix& d2, double D1, double D2,
                                       double alpha1, double alpha2, AlphabetSizes sizes,
                                       const GWDiscreteOptions& opts) {
  if (joint.rank() != 2) throw ValidationError("gw_objective_discrete: expected a 2-axis joint");
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0 && alpha2 >= 0.0 && alpha2 <= 1.0) ||
      alpha1 + alpha2 < 1.0 - 1e-12) {
    throw ValidationError("weights must satisfy 0 <= a1, a2 <= 1 and a1 + a2 >= 1");
  }
  if (sizes.y0 == 0 || sizes.y1 == 0 || sizes.y2 == 0) {
    throw ValidationError("channel alphabets must be non-empty");
  }
  Problem pr;
  pr.n1 = joint.axis_size(0);
  pr.n2 = joint.axis_size(1);
  if (d1.rows() != pr.n1 || d2.rows() != pr.n2) {
    throw ValidationError("gw_objective_discrete: distortion rows do not match source axes");
  }
  pr.m1 = d1.cols();
  pr.m2 = d2.cols();
  pr.p.assign(joint.probs().begin(), joint.probs().end());
  pr.d1 = &d1;
  pr.d2 = &d2;
  pr.sizes = sizes;
  for (std::size_t c = 0; c < pr.p.size(); ++c)
    if (pr.p[c] > kLogFloor) pr.cells.push_back(c);
  const std::vector<double> p1 = joint.marginal_table({0});
  const std::vector<double> p2 = joint.marginal_table({1});
  for (std::size_t x = 0; x < pr.n1; ++x)
    if (p1[x] > kLogFloor) pr.live1.push_back(x);
  for (std::size_t x = 0; x < pr.n2; ++x)
    if (p2[x] > kLogFloor) pr.live2.push_back(x);

  const double space = count_labelings(pr.cells.size(), sizes.y0) *
                       count_labelings(pr.live1.size(), sizes.y1) *
                       count_labelings(pr.live2.size(), sizes.y2);

  GWDiscreteResult best;
  best.T_value = kInf;
  bool any1 = false, any2 = false;

  auto consider = [&](const std::vector<int>& f0, const std::vector<int>& f1,
                      const std::vector<int>& f2, double h0, const SideEval& a,
                      const SideEval& b) {
    const double t = h0 + alpha1 * a.h_cond + alpha2 * b.h_cond;
    if (t < best.T_value - 1e-12) {
      best.T_value = t;
      best.h_y0 = h0;
      best.h_y1_given_y0 = a.h_cond;
      best.h_y2_given_y0 = b.h_cond;
      best.distortion1 = a.distortion;
      best.distortion2 = b.distortion;
      best.f0 = f0;
      best.f1 = f1;
      best.f2 = f2;
      best.g1 = a.decoder;
      best.g2 = b.decoder;
    }
  };

  if (space <= static_cast<double>(opts.exhaustive_limit)) {
    const auto l0 = canonical_labelings(pr.cells.size(), sizes.y0);
    const auto l1 = canonical_labelings(pr.live1.size(), sizes.y1);
    const auto l2 = canonical_labelings(pr.live2.size(), sizes.y2);
    std::vector<std::vector<int>> f1s, f2s;
    for (const auto& l : l1) f1s.push_back(expand(pr.live1, pr.n1, l));
    for (const auto& l : l2) f2s.push_back(expand(pr.live2, pr.n2, l));
    std::vector<SideEval> s1(f1s.size()), s2(f2s.size());
    for (const auto& l : l0) {
      const std::vector<int> f0 = expand(pr.cells, pr.p.size(), l);
      const double h0 = h_y0_of(pr, f0);
      for (std::size_t i = 0; i < f1s.size(); ++i) s1[i] = eval_side(pr, f0, f1s[i], true, h0);
      for (std::size_t i = 0; i < f2s.size(); ++i) s2[i] = eval_side(pr, f0, f2s[i], false, h0);
      for (std::size_t i = 0; i < f1s.size(); ++i) {
        const bool ok1 = s1[i].distortion <= D1 + kFeasTol;
        any1 = any1 || ok1;
        for (std::size_t k = 0; k < f2s.size(); ++k) {
          const bool ok2 = s2[k].distortion <= D2 + kFeasTol;
          any2 = any2 || ok2;
          if (ok1 && ok2) consider(f0, f1s[i], f2s[k], h0, s1[i], s2[k]);
        }
      }
    }
    best.exhaustive = true;
    best.evaluated = static_cast<std::size_t>(space);
  } else {
    // Simulated annealing on unrestricted labels with a distortion penalty.
    Rng rng(opts.seed, 0x6177);
    std::vector<int> f0(pr.p.size(), 0), f1(pr.n1, 0), f2(pr.n2, 0);
    for (std::size_t c : pr.cells) f0[c] = static_cast<int>(rng.below(sizes.y0));
    for (std::size_t x : pr.live1) f1[x] = static_cast<int>(rng.below(sizes.y1));
    for (std::size_t x : pr.live2) f2[x] = static_cast<int>(rng.below(sizes.y2));
    auto energy = [&](const std::vector<int>& a, const std::vector<int>& b,
                      const std::vector<int>& c, bool record) {
      const double h0 = h_y0_of(pr, a);
      const SideEval e1 = eval_side(pr, a, b, true, h0);
      const SideEval e2 = eval_side(pr, a, c, false, h0);
      const bool ok1 = e1.distortion <= D1 + kFeasTol;
      const bool ok2 = e2.distortion <= D2 + kFeasTol;
      any1 = any1 || ok1;
      any2 = any2 || ok2;
      if (record && ok1 && ok2) consider(a, b, c, h0, e1, e2);
      return h0 + alpha1 * e1.h_cond + alpha2 * e2.h_cond +
             100.0 * (std::max(0.0, e1.distortion - D1) + std::max(0.0, e2.distortion - D2));
    };
    double e = energy(f0, f1, f2, true);
    const std::size_t moves = pr.cells.size() + pr.live1.size() + pr.live2.size();
    const double t0 = 1.0, t1 = 1e-4;
    for (int it = 0; it < opts.anneal_iters; ++it) {
      const double temp = t0 * std::pow(t1 / t0, static_cast<double>(it) / opts.anneal_iters);
      std::size_t pick = rng.below(moves);
      std::vector<int>* target;
      std::size_t idx;
      std::size_t labels;
      if (pick < pr.cells.size()) {
        target = &f0, idx = pr.cells[pick], labels = sizes.y0;
      } else if ((pick -= pr.cells.size()) < pr.live1.size()) {
        target = &f1, idx = pr.live1[pick], labels = sizes.y1;
      } else {
        pick -= pr.live1.size();
        target = &f2, idx = pr.live2[pick], labels = sizes.y2;
      }
      const int old = (*target)[idx];
      (*target)[idx] = static_cast<int>(rng.below(labels));
      const double ne = energy(f0, f1, f2, true);
      if (ne <= e || rng.uniform() < std::exp((e - ne) / temp)) {
        e = ne;
      } else {
        (*target)[idx] = old;
      }
    }
    best.exhaustive = false;
    best.evaluated = static_cast<std::size_t>(opts.anneal_iters) + 1;
  }
  if (best.T_value == kInf) infeasible(any1, any2, D1, D2);
  return best;
}

}  // namespace gwn
