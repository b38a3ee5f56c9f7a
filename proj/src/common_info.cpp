#include "gwn/common_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gwn/rng.hpp"
#include "json.hpp"

namespace gwn {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pair(const JointPmf& joint, const char* what) {
  if (joint.rank() != 2) {
    throw ValidationError(std::string(what) + ": expected a 2-axis joint");
  }
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// I(A;B) from a flat [a][b] joint table.
double table_mi(const std::vector<double>& pab, std::size_t na, std::size_t nb) {
  std::vector<double> pa(na, 0.0), pb(nb, 0.0);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      pa[a] += pab[a * nb + b];
      pb[b] += pab[a * nb + b];
    }
  return std::max(0.0, entropy_of(pa) + entropy_of(pb) - entropy_of(pab));
}

// Measures of the joint (X1, X2, U) given P(x1,x2) and Q(u|x1,x2).
struct AuxMeasures {
  double mi = 0.0;   // I(X1,X2;U)
  double cmi = 0.0;  // I(X1;X2|U)
};

AuxMeasures aux_measures(const std::vector<double>& p, std::size_t n1,
                         std::size_t n2, const std::vector<double>& q,
                         std::size_t k) {
  std::vector<double> pxu(n1 * n2 * k);
  std::vector<double> pu(k, 0.0), p1u(n1 * k, 0.0), p2u(n2 * k, 0.0);
  for (std::size_t x1 = 0; x1 < n1; ++x1)
    for (std::size_t x2 = 0; x2 < n2; ++x2) {
      const std::size_t x = x1 * n2 + x2;
      for (std::size_t u = 0; u < k; ++u) {
        const double v = p[x] * q[x * k + u];
        pxu[x * k + u] = v;
        pu[u] += v;
        p1u[x1 * k + u] += v;
        p2u[x2 * k + u] += v;
      }
    }
  const double hx = entropy_of(p);
  const double hu = entropy_of(pu);
  const double hxu = entropy_of(pxu);
  AuxMeasures m;
  m.mi = std::max(0.0, hx + hu - hxu);
  m.cmi = std::max(0.0, entropy_of(p1u) + entropy_of(p2u) - hxu - hu);
  return m;
}

struct WynerCandidate {
  std::vector<double> q;  // Q(u|x) row-major [x][u]
  AuxMeasures m;
};

// Penalised alternating minimisation of I(X;U) + mu I(X1;X2|U) with mu
// increased geometrically. With the marginal and per-u conditionals of the
// current joint held fixed, the optimal update is
//   Q(u|x) ~ P(u) * (P(x1|u) P(x2|u))^(mu / (1 + mu)).
WynerCandidate wyner_alternating(const std::vector<double>& p, std::size_t n1,
                                 std::size_t n2, std::size_t k, Rng rng,
                                 const WynerOptions& opts) {
  const std::size_t nx = n1 * n2;
  std::vector<double> q(nx * k);
  for (std::size_t x = 0; x < nx; ++x) {
    const std::vector<double> row = rng.dirichlet(k, 1.0);
    std::copy(row.begin(), row.end(), q.begin() + x * k);
  }
  std::vector<double> pu(k), la(n1 * k), lb(n2 * k), lq(k);
  for (double mu = opts.mu_start;; mu *= opts.mu_growth) {
    const double mu_eff = std::min(mu, opts.mu_end);
    const double t = mu_eff / (1.0 + mu_eff);
    for (int it = 0; it < opts.inner_iters; ++it) {
      std::fill(pu.begin(), pu.end(), 0.0);
      std::fill(la.begin(), la.end(), 0.0);
      std::fill(lb.begin(), lb.end(), 0.0);
      for (std::size_t x1 = 0; x1 < n1; ++x1)
        for (std::size_t x2 = 0; x2 < n2; ++x2) {
          const std::size_t x = x1 * n2 + x2;
          for (std::size_t u = 0; u < k; ++u) {
            const double v = p[x] * q[x * k + u];
            pu[u] += v;
            la[x1 * k + u] += v;
            lb[x2 * k + u] += v;
          }
        }
      // Log conditionals; -inf marks impossible (x_i, u) pairs.
      for (std::size_t x1 = 0; x1 < n1; ++x1)
        for (std::size_t u = 0; u < k; ++u) {
          double& v = la[x1 * k + u];
          v = (pu[u] > 0.0 && v > 0.0) ? std::log(v / pu[u]) : -kInf;
        }
      for (std::size_t x2 = 0; x2 < n2; ++x2)
        for (std::size_t u = 0; u < k; ++u) {
          double& v = lb[x2 * k + u];
          v = (pu[u] > 0.0 && v > 0.0) ? std::log(v / pu[u]) : -kInf;
        }
      for (std::size_t x1 = 0; x1 < n1; ++x1)
        for (std::size_t x2 = 0; x2 < n2; ++x2) {
          const std::size_t x = x1 * n2 + x2;
          if (p[x] <= 0.0) continue;
          double m = -kInf;
          for (std::size_t u = 0; u < k; ++u) {
            lq[u] = pu[u] > 0.0
                        ? std::log(pu[u]) + t * (la[x1 * k + u] + lb[x2 * k + u])
                        : -kInf;
            m = std::max(m, lq[u]);
          }
          if (m == -kInf) continue;  // keep the previous row
          double total = 0.0;
          for (std::size_t u = 0; u < k; ++u) {
            lq[u] = std::exp(lq[u] - m);
            total += lq[u];
          }
          for (std::size_t u = 0; u < k; ++u) q[x * k + u] = lq[u] / total;
        }
    }
    if (mu >= opts.mu_end) break;
  }
  WynerCandidate c;
  c.m = aux_measures(p, n1, n2, q, k);
  c.q = std::move(q);
  return c;
}

// U = X1, U = X2 and constant U as always-available candidates.
std::vector<WynerCandidate> trivial_candidates(const std::vector<double>& p,
                                               std::size_t n1, std::size_t n2,
                                               std::size_t k) {
  std::vector<WynerCandidate> out;
  auto add = [&](auto label) {
    WynerCandidate c;
    c.q.assign(n1 * n2 * k, 0.0);
    for (std::size_t x1 = 0; x1 < n1; ++x1)
      for (std::size_t x2 = 0; x2 < n2; ++x2)
        c.q[(x1 * n2 + x2) * k + label(x1, x2)] = 1.0;
    c.m = aux_measures(p, n1, n2, c.q, k);
    out.push_back(std::move(c));
  };
  add([](std::size_t, std::size_t) { return std::size_t{0}; });
  if (n1 <= k) add([](std::size_t x1, std::size_t) { return x1; });
  if (n2 <= k) add([](std::size_t, std::size_t x2) { return x2; });
  return out;
}

// Picks the smallest feasible value; if nothing is feasible, the candidate
// with the least residual.
const WynerCandidate& pick_wyner(const std::vector<WynerCandidate>& cands,
                                 double tol, bool* feasible) {
  const WynerCandidate* best = nullptr;
  for (const auto& c : cands)
    if (c.m.cmi < tol && (!best || c.m.mi < best->m.mi)) best = &c;
  *feasible = best != nullptr;
  if (best) return *best;
  for (const auto& c : cands)
    if (!best || c.m.cmi < best->m.cmi) best = &c;
  return *best;
}

std::vector<WynerCandidate> wyner_search(const std::vector<double>& p,
                                         std::size_t n1, std::size_t n2,
                                         std::size_t k, const WynerOptions& opts) {
  std::vector<WynerCandidate> cands = trivial_candidates(p, n1, n2, k);
  const Rng root(opts.seed, 0x5759);
  for (int r = 0; r < opts.restarts; ++r)
    cands.push_back(wyner_alternating(p, n1, n2, k, root.split(r), opts));
  return cands;
}

JointPmf witness_of(const std::vector<double>& p, std::size_t n1, std::size_t n2,
                    const std::vector<double>& q, std::size_t k) {
  std::vector<double> w(n1 * n2 * k);
  for (std::size_t x = 0; x < n1 * n2; ++x)
    for (std::size_t u = 0; u < k; ++u) w[x * k + u] = p[x] * q[x * k + u];
  return JointPmf::from_weights({n1, n2, k}, std::move(w));
}

}  // namespace

std::string to_string(CommonInfoMethod m) {
  switch (m) {
    case CommonInfoMethod::kExactDecomposition: return "exact_decomposition";
    case CommonInfoMethod::kExhaustive: return "exhaustive";
    case CommonInfoMethod::kAlternating: return "alternating";
  }
  return "unknown";
}

SupportComponents support_components(const JointPmf& joint) {
  require_pair(joint, "support_components");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const auto p = joint.probs();
  UnionFind uf(n1 + n2);
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n2; ++b)
      if (p[a * n2 + b] > kLogFloor) uf.unite(static_cast<int>(a), static_cast<int>(n1 + b));

  const std::vector<double> p1 = joint.marginal_table({0});
  const std::vector<double> p2 = joint.marginal_table({1});
  SupportComponents out;
  out.of_x1.assign(n1, -1);
  out.of_x2.assign(n2, -1);
  std::vector<int> id_of_root(n1 + n2, -1);
  auto id_for = [&](int node) {
    const int r = uf.find(node);
    if (id_of_root[r] < 0) {
      id_of_root[r] = static_cast<int>(out.mass.size());
      out.mass.push_back(0.0);
    }
    return id_of_root[r];
  };
  for (std::size_t a = 0; a < n1; ++a)
    if (p1[a] > kLogFloor) {
      out.of_x1[a] = id_for(static_cast<int>(a));
      out.mass[out.of_x1[a]] += p1[a];
    }
  for (std::size_t b = 0; b < n2; ++b)
    if (p2[b] > kLogFloor) out.of_x2[b] = id_for(static_cast<int>(n1 + b));
  return out;
}

CommonInfoResult gk_common_information_lossless(const JointPmf& joint) {
  const SupportComponents comps = support_components(joint);
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const std::size_t k = std::max<std::size_t>(1, comps.mass.size());
  std::vector<double> w(n1 * n2 * k, 0.0);
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n2; ++b) {
      const double v = joint.probs()[a * n2 + b];
      const int c = comps.of_x1[a] >= 0 ? comps.of_x1[a] : 0;
      w[(a * n2 + b) * k + c] = v;
    }
  CommonInfoResult r{entropy_of(comps.mass), JointPmf::from_weights({n1, n2, k}, std::move(w)),
                     k, CommonInfoMethod::kExactDecomposition, 0.0, true};
  return r;
}

CommonInfoResult wyner_common_information_lossless(const JointPmf& joint,
                                                   const WynerOptions& opts) {
  require_pair(joint, "wyner_common_information_lossless");
  if (opts.restarts < 0) throw std::invalid_argument("restarts must be >= 0");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const std::size_t k = opts.aux_size == 0 ? n1 * n2 : opts.aux_size;
  const std::vector<double> p(joint.probs().begin(), joint.probs().end());

  const std::vector<WynerCandidate> cands = wyner_search(p, n1, n2, k, opts);
  bool feasible = false;
  const WynerCandidate& best = pick_wyner(cands, opts.tol, &feasible);
  return {best.m.mi, witness_of(p, n1, n2, best.q, k), k,
          CommonInfoMethod::kAlternating, best.m.cmi, feasible};
}

CommonInfoResult wyner_common_information_grid(const JointPmf& joint, int steps,
                                               double cmi_slack) {
  require_pair(joint, "wyner_common_information_grid");
  if (steps < 1) throw std::invalid_argument("grid steps must be >= 1");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const std::vector<double> p(joint.probs().begin(), joint.probs().end());
  std::vector<std::size_t> cells;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > kLogFloor) cells.push_back(x);
  double total = 1.0;
  for (std::size_t i = 0; i < cells.size(); ++i) total *= steps + 1;
  if (total > static_cast<double>(kMaxCells)) {
    throw ValidationError("wyner grid: " + std::to_string(steps + 1) + "^" +
                          std::to_string(cells.size()) + " points exceeds 10^7");
  }

  constexpr std::size_t k = 2;
  std::vector<double> q(p.size() * k, 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) q[x * k] = 1.0;
  std::vector<int> digit(cells.size(), 0);
  std::vector<double> best_q = q;
  AuxMeasures best{kInf, kInf};
  bool feasible = false;
  for (;;) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double v = static_cast<double>(digit[i]) / steps;
      q[cells[i] * k] = v;
      q[cells[i] * k + 1] = 1.0 - v;
    }
    const AuxMeasures m = aux_measures(p, n1, n2, q, k);
    if (m.cmi <= cmi_slack && m.mi < best.mi) {
      best = m;
      best_q = q;
      feasible = true;
    }
    std::size_t i = 0;
    while (i < cells.size() && ++digit[i] > steps) digit[i++] = 0;
    if (i == cells.size()) break;
  }
  if (!feasible) best = aux_measures(p, n1, n2, best_q, k);
  return {best.mi, witness_of(p, n1, n2, best_q, k), k, CommonInfoMethod::kExhaustive,
          best.cmi, feasible};
}

JointPmf tuple_joint(const JointPmf& joint, std::span<const double> conditional,
                     std::size_t repro1, std::size_t repro2) {
  require_pair(joint, "tuple_joint");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const std::size_t nz = repro1 * repro2;
  if (conditional.size() != n1 * n2 * nz) {
    throw std::invalid_argument("tuple_joint: conditional shape mismatch");
  }
  std::vector<double> w(n1 * n2 * nz);
  for (std::size_t x = 0; x < n1 * n2; ++x)
    for (std::size_t z = 0; z < nz; ++z)
      w[x * nz + z] = joint.probs()[x] * conditional[x * nz + z];
  return JointPmf::from_weights({n1, n2, repro1, repro2}, std::move(w));
}

// ---------------------------------------------------------------------------
// Lossy enumeration

namespace {

struct Encoder {
  std::vector<double> e;  // P(z|x) row-major [x][z]
  double rate = 0.0;      // I(X;Z)
  double distortion = 0.0;
};

void score_encoder(std::span<const double> px, const DistortionMatrix& d, Encoder& enc,
                   std::vector<double>& pz) {
  const std::size_t m = d.cols();
  pz.assign(m, 0.0);
  double hzx = 0.0;
  enc.distortion = 0.0;
  for (std::size_t x = 0; x < px.size(); ++x) {
    if (px[x] <= kLogFloor) continue;
    for (std::size_t z = 0; z < m; ++z) {
      const double v = enc.e[x * m + z];
      pz[z] += px[x] * v;
      enc.distortion += px[x] * v * d(x, z);
      if (v > kLogFloor) hzx -= px[x] * v * std::log2(v);
    }
  }
  enc.rate = std::max(0.0, entropy_of(pz) - hzx);
}

// All row-stochastic matrices with entries in {0, 1/grid, ..., 1}. Rows of
// zero-mass symbols are pinned to the first composition.
std::vector<Encoder> grid_encoders(std::span<const double> px, const DistortionMatrix& d,
                                   int grid, std::size_t max_cells,
                                   std::size_t* enumerated) {
  const std::size_t n = px.size();
  const std::size_t m = d.cols();
  std::vector<std::vector<int>> comps;
  std::vector<int> cur(m, 0);
  // Compositions of `grid` into m parts, lexicographic.
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == m) {
      cur[pos] = left;
      comps.push_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, grid);

  std::vector<std::size_t> live;
  for (std::size_t x = 0; x < n; ++x)
    if (px[x] > kLogFloor) live.push_back(x);
  double total = 1.0;
  for (std::size_t i = 0; i < live.size(); ++i) total *= static_cast<double>(comps.size());
  if (total > static_cast<double>(max_cells)) {
    throw ValidationError("tuple enumeration: " + std::to_string(total) +
                          " grid conditionals exceed the limit of " +
                          std::to_string(max_cells) + "; use a coarser grid");
  }

  std::vector<Encoder> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> digit(live.size(), 0);
  std::vector<double> pz(m);
  for (;;) {
    Encoder enc;
    enc.e.assign(n * m, 0.0);
    for (std::size_t x = 0; x < n; ++x) enc.e[x * m] = 1.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const std::vector<int>& c = comps[digit[i]];
      for (std::size_t z = 0; z < m; ++z)
        enc.e[live[i] * m + z] = static_cast<double>(c[z]) / grid;
    }
    score_encoder(px, d, enc, pz);
    out.push_back(std::move(enc));
    std::size_t i = 0;
    while (i < live.size() && ++digit[i] == comps.size()) digit[i++] = 0;
    if (i == live.size()) break;
  }
  *enumerated += out.size();
  return out;
}

double min_expected(std::span<const double> px, const DistortionMatrix& d) {
  double best = kInf;
  for (std::size_t z = 0; z < d.cols(); ++z) {
    double e = 0.0;
    for (std::size_t x = 0; x < d.rows(); ++x) e += px[x] * d(x, z);
    best = std::min(best, e);
  }
  return best;
}

double min_achievable(std::span<const double> px, const DistortionMatrix& d) {
  double total = 0.0;
  for (std::size_t x = 0; x < d.rows(); ++x) {
    double best = kInf;
    for (std::size_t z = 0; z < d.cols(); ++z) best = std::min(best, d(x, z));
    total += px[x] * best;
  }
  return total;
}

constexpr double kSlopeFloor = -1024.0;
constexpr int kBisectSteps = 40;

struct MarginalCert {
  RateBracket bracket;
  std::vector<double> encoder;  // best feasible BA encoder, [x][z]
  double slope = 0.0;
};

// Bracket on R(D) from slope bisection: every BA point gives a dual lower
// bound at D; feasible points give upper bounds.
MarginalCert certify_marginal(std::span<const double> px, const DistortionMatrix& d,
                              double D, const EnumerationOptions& opts) {
  const std::size_t n = px.size();
  const std::size_t m = d.cols();
  MarginalCert cert;
  cert.bracket = {kInf, 0.0};
  const double dmax = min_expected(px, d);
  if (D >= dmax - opts.distortion_tol) {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t z = 0; z < m; ++z) {
      double e = 0.0;
      for (std::size_t x = 0; x < n; ++x) e += px[x] * d(x, z);
      if (e < bd) {
        bd = e;
        best = z;
      }
    }
    cert.encoder.assign(n * m, 0.0);
    for (std::size_t x = 0; x < n; ++x) cert.encoder[x * m + best] = 1.0;
    cert.bracket = {0.0, 0.0};
    return cert;
  }
  std::vector<double> expo(n * m), cost(n * m);
  auto solve = [&](double s) {
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t z = 0; z < m; ++z) {
        cost[x * m + z] = d(x, z);
        expo[x * m + z] = s * d(x, z);
      }
    BASolution sol = blahut_arimoto(px, m, expo, cost, s, opts.ba);
    const RDPoint& p = sol.point;
    cert.bracket.lower = std::max(cert.bracket.lower,
                                  p.lower_bound + s * (D - p.distortion) / kLn2);
    const bool ok = p.distortion <= D + opts.distortion_tol;
    if (ok && p.rate < cert.bracket.upper) {
      cert.bracket.upper = p.rate;
      cert.encoder = std::move(sol.conditional);
      cert.slope = s;
    }
    return ok;
  };
  double lo = -1.0;  // feasible side (more negative)
  double hi = 0.0;
  while (!solve(lo)) {
    hi = lo;
    if (lo <= kSlopeFloor) return cert;
    lo *= 2.0;
  }
  for (int i = 0; i < kBisectSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (solve(mid)) lo = mid; else hi = mid;
  }
  return cert;
}

struct JointCert {
  RateBracket bracket;
  std::vector<double> conditional;
  double d1 = 0.0;
  double d2 = 0.0;
};

JointCert certify_joint(const JointPmf& joint, const DistortionMatrix& d1,
                        const DistortionMatrix& d2, double D1, double D2,
                        double s1, double s2, const EnumerationOptions& opts) {
  JointCert cert;
  cert.bracket = {kInf, 0.0};
  auto solve = [&](double a, double b) {
    JointRDPoint p = ba_joint(joint, d1, d2, a, b, opts.ba);
    cert.bracket.lower = std::max(
        cert.bracket.lower,
        p.lower_bound + (a * (D1 - p.distortion1) + b * (D2 - p.distortion2)) / kLn2);
    const bool f1 = p.distortion1 <= D1 + opts.distortion_tol;
    const bool f2 = p.distortion2 <= D2 + opts.distortion_tol;
    if (f1 && f2 && p.rate < cert.bracket.upper) {
      cert.bracket.upper = p.rate;
      cert.conditional = std::move(p.conditional);
      cert.d1 = p.distortion1;
      cert.d2 = p.distortion2;
    }
    return std::pair<bool, bool>{f1, f2};
  };
  if (s1 == 0.0 && s2 == 0.0) {
    solve(0.0, 0.0);
    return cert;
  }
  // Coordinate bisection: each round solves for the slope of one task with
  // the other held fixed. A zero start means that constraint is slack.
  const bool active1 = s1 < 0.0;
  const bool active2 = s2 < 0.0;
  auto bisect = [&](bool first) {
    double& s = first ? s1 : s2;
    auto feasible = [&](double v) {
      const auto f = first ? solve(v, s2) : solve(s1, v);
      return first ? f.first : f.second;
    };
    double lo = std::min(s, -1e-3);
    double hi = 0.0;
    while (!feasible(lo)) {
      hi = lo;
      if (lo <= kSlopeFloor) {
        s = lo;
        return;
      }
      lo *= 2.0;
    }
    for (int i = 0; i < kBisectSteps; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid)) lo = mid; else hi = mid;
    }
    s = lo;
  };
  for (int round = 0; round < 4; ++round) {
    if (active1) bisect(true);
    if (active2) bisect(false);
    if (!(active1 && active2)) break;
  }
  return cert;
}

// Output joint P(z1,z2) of a product tuple.
void product_output(std::span<const double> p, std::size_t n1, std::size_t n2,
                    const std::vector<double>& e1, std::size_t m1,
                    const std::vector<double>& e2, std::size_t m2,
                    std::vector<double>& pz) {
  pz.assign(m1 * m2, 0.0);
  std::vector<double> tmp(m2);
  for (std::size_t x1 = 0; x1 < n1; ++x1) {
    // sum_x2 p(x1,x2) e2(z2|x2)
    std::fill(tmp.begin(), tmp.end(), 0.0);
    bool any = false;
    for (std::size_t x2 = 0; x2 < n2; ++x2) {
      const double w = p[x1 * n2 + x2];
      if (w <= 0.0) continue;
      any = true;
      for (std::size_t z2 = 0; z2 < m2; ++z2) tmp[z2] += w * e2[x2 * m2 + z2];
    }
    if (!any) continue;
    for (std::size_t z1 = 0; z1 < m1; ++z1) {
      const double a = e1[x1 * m1 + z1];
      if (a == 0.0) continue;
      for (std::size_t z2 = 0; z2 < m2; ++z2) pz[z1 * m2 + z2] += a * tmp[z2];
    }
  }
}

std::vector<double> product_conditional(std::size_t n1, std::size_t n2,
                                        const std::vector<double>& e1, std::size_t m1,
                                        const std::vector<double>& e2, std::size_t m2) {
  std::vector<double> c(n1 * n2 * m1 * m2);
  for (std::size_t x1 = 0; x1 < n1; ++x1)
    for (std::size_t x2 = 0; x2 < n2; ++x2)
      for (std::size_t z1 = 0; z1 < m1; ++z1)
        for (std::size_t z2 = 0; z2 < m2; ++z2)
          c[((x1 * n2 + x2) * m1 + z1) * m2 + z2] = e1[x1 * m1 + z1] * e2[x2 * m2 + z2];
  return c;
}

struct TupleStats {
  double rate, d1, d2, ii;
};

TupleStats general_stats(std::span<const double> p, std::size_t n1, std::size_t n2,
                         const std::vector<double>& cond, std::size_t m1, std::size_t m2,
                         const DistortionMatrix& d1, const DistortionMatrix& d2) {
  const std::size_t nx = n1 * n2;
  const std::size_t nz = m1 * m2;
  std::vector<double> pxz(nx * nz), pxz1(nx * m1, 0.0), pxz2(nx * m2, 0.0);
  TupleStats s{0, 0, 0, 0};
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z) {
      const double v = p[x] * cond[x * nz + z];
      pxz[x * nz + z] = v;
      pxz1[x * m1 + z / m2] += v;
      pxz2[x * m2 + z % m2] += v;
      s.d1 += v * d1(x / n2, z / m2);
      s.d2 += v * d2(x % n2, z % m2);
    }
  s.rate = table_mi(pxz, nx, nz);
  s.ii = table_mi(pxz1, nx, m1) + table_mi(pxz2, nx, m2) - s.rate;
  return s;
}

}  // namespace

TupleSets lossy_tuple_enumeration(const JointPmf& joint, const DistortionMatrix& d1,
                                  const DistortionMatrix& d2, double D1, double D2,
                                  const EnumerationOptions& opts) {
  require_pair(joint, "lossy_tuple_enumeration");
  if (opts.grid < 1) throw std::invalid_argument("grid must be >= 1");
  if (!(opts.rate_tol >= 0.0)) throw std::invalid_argument("rate tol must be >= 0");
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  if (d1.rows() != n1 || d2.rows() != n2) {
    throw ValidationError("lossy_tuple_enumeration: distortion rows do not match source axes");
  }
  const std::size_t m1 = d1.cols();
  const std::size_t m2 = d2.cols();
  const auto p = joint.probs();
  const std::vector<double> p1 = joint.marginal_table({0});
  const std::vector<double> p2 = joint.marginal_table({1});
  if (D1 < min_achievable(p1, d1) - opts.distortion_tol) {
    throw ValidationError("distortion target D1 is below the minimum achievable distortion");
  }
  if (D2 < min_achievable(p2, d2) - opts.distortion_tol) {
    throw ValidationError("distortion target D2 is below the minimum achievable distortion");
  }
  const double tol = opts.rate_tol;

  TupleSets out;
  out.repro1 = m1;
  out.repro2 = m2;
  const MarginalCert c1 = certify_marginal(p1, d1, D1, opts);
  const MarginalCert c2 = certify_marginal(p2, d2, D2, opts);
  out.rate1 = c1.bracket;
  out.rate2 = c2.bracket;

  std::vector<Encoder> g1 = grid_encoders(p1, d1, opts.grid, opts.max_cells, &out.enumerated);
  std::vector<Encoder> g2 = grid_encoders(p2, d2, opts.grid, opts.max_cells, &out.enumerated);
  // The solver's optimal encoders join the grid candidates.
  {
    std::vector<double> scratch;
    if (!c1.encoder.empty()) {
      Encoder e{c1.encoder, 0.0, 0.0};
      score_encoder(p1, d1, e, scratch);
      g1.push_back(std::move(e));
    }
    if (!c2.encoder.empty()) {
      Encoder e{c2.encoder, 0.0, 0.0};
      score_encoder(p2, d2, e, scratch);
      g2.push_back(std::move(e));
    }
  }
  for (const Encoder& e : g1)
    if (e.distortion <= D1 + opts.distortion_tol) out.rate1.upper = std::min(out.rate1.upper, e.rate);
  for (const Encoder& e : g2)
    if (e.distortion <= D2 + opts.distortion_tol) out.rate2.upper = std::min(out.rate2.upper, e.rate);

  const double dmax1 = min_expected(p1, d1);
  const double dmax2 = min_expected(p2, d2);
  const double s1 = D1 >= dmax1 - opts.distortion_tol ? 0.0 : c1.slope;
  const double s2 = D2 >= dmax2 - opts.distortion_tol ? 0.0 : c2.slope;
  JointCert cj = certify_joint(joint, d1, d2, D1, D2, s1, s2, opts);
  // The product of the marginal optima is always feasible.
  std::vector<double> pz;
  if (!c1.encoder.empty() && !c2.encoder.empty()) {
    const std::vector<double> cond = product_conditional(n1, n2, c1.encoder, m1, c2.encoder, m2);
    const TupleStats st = general_stats(p, n1, n2, cond, m1, m2, d1, d2);
    if (st.rate < cj.bracket.upper) {
      cj.bracket.upper = st.rate;
      cj.conditional = cond;
      cj.d1 = st.d1;
      cj.d2 = st.d2;
    }
  }
  // Lower bounds never exceed the matching upper bounds by more than solver noise.
  cj.bracket.lower = std::min(cj.bracket.lower, cj.bracket.upper);
  out.rate1.lower = std::min(out.rate1.lower, out.rate1.upper);
  out.rate2.lower = std::min(out.rate2.lower, out.rate2.upper);
  out.joint_rate = cj.bracket;

  // Receive set: product couplings of near-optimal marginal encoders.
  std::vector<int> r1, r2;
  for (std::size_t i = 0; i < g1.size(); ++i)
    if (g1[i].distortion <= D1 + opts.distortion_tol && g1[i].rate <= out.rate1.upper + tol)
      r1.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < g2.size(); ++i)
    if (g2[i].distortion <= D2 + opts.distortion_tol && g2[i].rate <= out.rate2.upper + tol)
      r2.push_back(static_cast<int>(i));

  // Transmit candidates: feasible encoders, sorted by rate for pruning.
  const double i12 = mutual_information(joint, {0}, {1});
  const double joint_cap = out.joint_rate.upper + tol;
  std::vector<int> t1, t2;
  for (std::size_t i = 0; i < g1.size(); ++i)
    if (g1[i].distortion <= D1 + opts.distortion_tol && g1[i].rate <= joint_cap)
      t1.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < g2.size(); ++i)
    if (g2[i].distortion <= D2 + opts.distortion_tol && g2[i].rate <= joint_cap)
      t2.push_back(static_cast<int>(i));
  auto by_rate = [](const std::vector<Encoder>& g) {
    return [&g](int a, int b) {
      if (g[a].rate != g[b].rate) return g[a].rate < g[b].rate;
      return a < b;
    };
  };
  std::sort(t1.begin(), t1.end(), by_rate(g1));
  std::sort(t2.begin(), t2.end(), by_rate(g2));

  // Keep only encoders referenced by some tuple.
  std::vector<int> remap1(g1.size(), -1), remap2(g2.size(), -1);
  auto ref1 = [&](int i) {
    if (remap1[i] < 0) {
      remap1[i] = static_cast<int>(out.encoders1.size());
      out.encoders1.push_back(g1[i].e);
    }
    return remap1[i];
  };
  auto ref2 = [&](int i) {
    if (remap2[i] < 0) {
      remap2[i] = static_cast<int>(out.encoders2.size());
      out.encoders2.push_back(g2[i].e);
    }
    return remap2[i];
  };

  std::size_t pairs = 0;
  for (int a : r1)
    for (int b : r2) {
      if (++pairs > opts.max_pairs) break;
      product_output(p, n1, n2, g1[a].e, m1, g2[b].e, m2, pz);
      ReproTuple t;
      t.interaction = table_mi(pz, m1, m2);
      t.rate = g1[a].rate + g2[b].rate - t.interaction;
      t.distortion1 = g1[a].distortion;
      t.distortion2 = g2[b].distortion;
      t.encoder1 = ref1(a);
      t.encoder2 = ref2(b);
      out.receive.push_back(std::move(t));
    }

  pairs = 0;
  for (int a : t1) {
    if (g1[a].rate + (t2.empty() ? 0.0 : g2[t2.front()].rate) - i12 > joint_cap) break;
    for (int b : t2) {
      if (g1[a].rate + g2[b].rate - i12 > joint_cap) break;
      if (++pairs > opts.max_pairs) break;
      product_output(p, n1, n2, g1[a].e, m1, g2[b].e, m2, pz);
      const double ii = table_mi(pz, m1, m2);
      const double rate = g1[a].rate + g2[b].rate - ii;
      if (rate > joint_cap) continue;
      ReproTuple t;
      t.interaction = ii;
      t.rate = rate;
      t.distortion1 = g1[a].distortion;
      t.distortion2 = g2[b].distortion;
      t.encoder1 = ref1(a);
      t.encoder2 = ref2(b);
      out.transmit.push_back(std::move(t));
    }
    if (pairs > opts.max_pairs) break;
  }
  out.enumerated += pairs;

  // The solver's optimum joins the transmit set unless a grid tuple already
  // equals it on the support.
  if (!cj.conditional.empty()) {
    const std::size_t nz = m1 * m2;
    bool duplicate = false;
    for (const ReproTuple& t : out.transmit) {
      const auto& e1 = out.encoders1[t.encoder1];
      const auto& e2 = out.encoders2[t.encoder2];
      bool same = true;
      for (std::size_t x = 0; x < n1 * n2 && same; ++x) {
        if (p[x] <= kLogFloor) continue;
        for (std::size_t z = 0; z < nz && same; ++z) {
          const double v = e1[(x / n2) * m1 + z / m2] * e2[(x % n2) * m2 + z % m2];
          same = std::abs(v - cj.conditional[x * nz + z]) <= 1e-9;
        }
      }
      if (same) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      const TupleStats st = general_stats(p, n1, n2, cj.conditional, m1, m2, d1, d2);
      ReproTuple t;
      t.conditional = cj.conditional;
      t.rate = st.rate;
      t.distortion1 = st.d1;
      t.distortion2 = st.d2;
      t.interaction = st.ii;
      out.transmit.push_back(std::move(t));
    }
  }

  if (out.receive.empty()) {
    throw NumericalError("tuple enumeration: receive set is empty at rate tol " +
                         std::to_string(tol) + "; use a coarser tol");
  }
  if (out.transmit.empty()) {
    throw NumericalError("tuple enumeration: transmit set is empty at rate tol " +
                         std::to_string(tol) + "; use a coarser tol");
  }

  // Membership thresholds sit `tol` above the certified upper bounds, so
  //   max receive II <= R1 + R2 - R12 + 2 tol + gaps,
  //   min transmit II >= R1 + R2 - R12 - tol - gaps.
  out.certification_slack = 3.0 * tol + (out.rate1.upper - out.rate1.lower) +
                            (out.rate2.upper - out.rate2.lower) +
                            (out.joint_rate.upper - out.joint_rate.lower);
  return out;
}

BoundCheckReport check_theorem1(const JointPmf& joint, const DistortionMatrix& d1,
                                const DistortionMatrix& d2, double D1, double D2,
                                const BoundCheckOptions& opts) {
  const TupleSets sets = lossy_tuple_enumeration(joint, d1, d2, D1, D2, opts.enumeration);
  const std::size_t n1 = joint.axis_size(0);
  const std::size_t n2 = joint.axis_size(1);
  const std::size_t m1 = sets.repro1;
  const std::size_t m2 = sets.repro2;
  const auto p = joint.probs();

  BoundCheckReport rep;
  rep.enumerated_tuples = sets.enumerated;
  rep.certification_slack = sets.certification_slack;
  rep.max_receive_ii = -kInf;
  rep.min_transmit_ii = kInf;
  for (const ReproTuple& t : sets.receive) {
    rep.receive_ii.push_back(t.interaction);
    rep.max_receive_ii = std::max(rep.max_receive_ii, t.interaction);
  }
  for (const ReproTuple& t : sets.transmit) {
    rep.transmit_ii.push_back(t.interaction);
    rep.min_transmit_ii = std::min(rep.min_transmit_ii, t.interaction);
  }

  // Common part recoverable from both reproductions: merge support components
  // whose symbols share a reachable reproduction symbol, then take the
  // entropy of the merged partition. It is a function of Z1 and of Z2, so its
  // entropy never exceeds I(Z1;Z2) of the same tuple.
  const SupportComponents comps = support_components(joint);
  const std::vector<double> p1 = joint.marginal_table({0});
  const std::vector<double> p2 = joint.marginal_table({1});
  rep.gk_value = 0.0;
  for (const ReproTuple& t : sets.receive) {
    UnionFind uf(comps.mass.size());
    const auto& e1 = sets.encoders1[t.encoder1];
    const auto& e2 = sets.encoders2[t.encoder2];
    for (std::size_t z = 0; z < m1; ++z) {
      int first = -1;
      for (std::size_t x = 0; x < n1; ++x)
        if (p1[x] > kLogFloor && e1[x * m1 + z] > 0.0) {
          if (first < 0) first = comps.of_x1[x]; else uf.unite(first, comps.of_x1[x]);
        }
    }
    for (std::size_t z = 0; z < m2; ++z) {
      int first = -1;
      for (std::size_t x = 0; x < n2; ++x)
        if (p2[x] > kLogFloor && e2[x * m2 + z] > 0.0) {
          if (first < 0) first = comps.of_x2[x]; else uf.unite(first, comps.of_x2[x]);
        }
    }
    std::vector<double> merged(comps.mass.size(), 0.0);
    for (std::size_t c = 0; c < comps.mass.size(); ++c)
      merged[uf.find(static_cast<int>(c))] += comps.mass[c];
    rep.gk_value = std::max(rep.gk_value, entropy_of(merged));
  }

  // Wyner side: for the lowest-rate transmit tuples, search auxiliaries U
  // generated from (Z1,Z2) that make Z1 and Z2 conditionally independent;
  // any such U bounds the tuple's II by I(X;U) + I(Z1;Z2|U).
  std::vector<std::size_t> order(sets.transmit.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sets.transmit[a].rate != sets.transmit[b].rate)
      return sets.transmit[a].rate < sets.transmit[b].rate;
    return a < b;
  });
  if (order.size() > opts.max_wyner_tuples) order.resize(opts.max_wyner_tuples);
  // Always include the solver's optimum if it was kept.
  for (std::size_t i = 0; i < sets.transmit.size(); ++i)
    if (sets.transmit[i].encoder1 < 0 &&
        std::find(order.begin(), order.end(), i) == order.end())
      order.push_back(i);

  const std::size_t nx = n1 * n2;
  const std::size_t nz = m1 * m2;
  rep.wyner_value = kInf;
  rep.wyner_residual = 0.0;
  WynerOptions wopts = opts.wyner;
  const std::size_t k = wopts.aux_size == 0 ? nz : wopts.aux_size;
  for (std::size_t idx : order) {
    const ReproTuple& t = sets.transmit[idx];
    const std::vector<double> cond =
        t.encoder1 >= 0 ? product_conditional(n1, n2, sets.encoders1[t.encoder1], m1,
                                              sets.encoders2[t.encoder2], m2)
                        : t.conditional;
    std::vector<double> pz(nz, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t z = 0; z < nz; ++z) pz[z] += p[x] * cond[x * nz + z];
    wopts.seed = opts.wyner.seed + idx;
    const std::vector<WynerCandidate> cands = wyner_search(pz, m1, m2, k, wopts);
    for (const WynerCandidate& c : cands) {
      if (!(c.m.cmi < wopts.tol)) continue;
      // P(x,u) = sum_z p(x) P(z|x) Q(u|z)
      std::vector<double> pxu(nx * k, 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t z = 0; z < nz; ++z) {
          const double w = p[x] * cond[x * nz + z];
          if (w <= 0.0) continue;
          for (std::size_t u = 0; u < k; ++u) pxu[x * k + u] += w * c.q[z * k + u];
        }
      const double ixu = table_mi(pxu, nx, k);
      if (ixu + c.m.cmi < rep.wyner_value + rep.wyner_residual) {
        rep.wyner_value = ixu;
        rep.wyner_residual = c.m.cmi;
      }
    }
  }

  rep.ordering_satisfied = rep.gk_value <= rep.max_receive_ii + 1e-9 &&
                           rep.max_receive_ii <= rep.min_transmit_ii + rep.certification_slack + 1e-9 &&
                           rep.min_transmit_ii <= rep.wyner_value + rep.wyner_residual + 1e-9;
  return rep;
}

std::string to_json(const BoundCheckReport& r, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram bins must be >= 1");
  nlohmann::ordered_json j;
  j["max_receive_ii"] = r.max_receive_ii;
  j["min_transmit_ii"] = r.min_transmit_ii;
  j["gk_value"] = r.gk_value;
  j["wyner_value"] = r.wyner_value;
  j["ordering_satisfied"] = r.ordering_satisfied;
  j["enumerated_tuples"] = r.enumerated_tuples;
  j["certification_slack"] = r.certification_slack;
  j["wyner_residual"] = r.wyner_residual;

  double lo = kInf, hi = -kInf;
  for (double v : r.receive_ii) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : r.transmit_ii) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(lo <= hi)) lo = hi = 0.0;
  if (hi - lo < 1e-12) hi = lo + 1e-12;
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
  auto hist = [&](const std::vector<double>& vals) {
    std::vector<std::size_t> counts(bins, 0);
    for (double v : vals) {
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      counts[std::clamp(b, 0, bins - 1)]++;
    }
    return counts;
  };
  j["histogram"] = {{"edges", edges},
                    {"receive_counts", hist(r.receive_ii)},
                    {"transmit_counts", hist(r.transmit_ii)}};
  return j.dump(2);
}

}  // namespace gwn
