// Finite-difference checks for the autodiff ops, shared by the unit tests and
// the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gwn/autodiff.hpp"
#include "gwn/codec.hpp"
#include "gwn/rng.hpp"

namespace gwn::testing {

struct GradReport {
  std::string op;
  double worst = 0.0;  // max |fd - analytic| / max(|fd|, |analytic|, 1)
};

using OpFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Reduces op(inputs) to sum(weights * out) so every Jacobian entry is probed,
// then compares the tape gradient against central differences.
inline GradReport check_op(const std::string& name, const OpFn& op,
                           const std::vector<Tensor>& inputs, Rng& rng, double h = 1e-6) {
  Tensor weights;
  auto eval = [&](const std::vector<Tensor>& in, Tape& tape, std::vector<Var>& leaves) {
    leaves.clear();
    for (const Tensor& t : in) leaves.push_back(tape.leaf(t));
    Var out = op(tape, leaves);
    if (weights.size() == 0) weights = random_tensor(rng, out.shape(), -1.0, 1.0);
    return sum(mul(out, tape.constant(weights)));
  };
  Tape tape;
  std::vector<Var> leaves;
  Var loss = eval(inputs, tape, leaves);
  tape.backward(loss);
  GradReport rep{name, 0.0};
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor g = tape.grad(leaves[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> up = inputs, dn = inputs;
      up[k][i] += h;
      dn[k][i] -= h;
      Tape tu, td;
      std::vector<Var> lu, ld;
      const double fu = eval(up, tu, lu).value().item();
      const double fd_ = eval(dn, td, ld).value().item();
      const double fd = (fu - fd_) / (2.0 * h);
      const double err = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1.0});
      rep.worst = std::max(rep.worst, err);
    }
  }
  return rep;
}

inline std::vector<GradReport> run_gradient_suite(std::uint64_t seed = 17) {
  Rng rng(seed);
  std::vector<GradReport> out;
  auto r = [&](std::size_t n, std::size_t m, double lo = -2.0, double hi = 2.0) {
    return random_tensor(rng, {n, m}, lo, hi);
  };
  auto away_from_zero = [&](std::size_t n, std::size_t m) {
    Tensor t = r(n, m);
    for (auto& v : t.data()) v += v < 0 ? -0.05 : 0.05;
    return t;
  };
  using V = const std::vector<Var>&;
  out.push_back(check_op("matmul", [](Tape&, V v) { return matmul(v[0], v[1]); },
                         {r(3, 4), r(4, 5)}, rng));
  out.push_back(check_op("add", [](Tape&, V v) { return add(v[0], v[1]); }, {r(3, 4), r(3, 4)}, rng));
  out.push_back(check_op("sub", [](Tape&, V v) { return sub(v[0], v[1]); }, {r(3, 4), r(3, 4)}, rng));
  out.push_back(check_op("mul", [](Tape&, V v) { return mul(v[0], v[1]); }, {r(3, 4), r(3, 4)}, rng));
  out.push_back(check_op("add_row", [](Tape&, V v) { return add_row(v[0], v[1]); },
                         {r(3, 4), r(1, 4)}, rng));
  out.push_back(check_op("scale", [](Tape&, V v) { return scale(v[0], -1.7); }, {r(3, 4)}, rng));
  out.push_back(check_op("add_scalar", [](Tape&, V v) { return add_scalar(v[0], 0.3); },
                         {r(3, 4)}, rng));
  out.push_back(check_op("elu", [](Tape&, V v) { return elu(v[0]); }, {away_from_zero(3, 4)}, rng));
  out.push_back(check_op("softplus", [](Tape&, V v) { return softplus(v[0]); }, {r(3, 4, -8, 8)}, rng));
  out.push_back(check_op("square", [](Tape&, V v) { return square(v[0]); }, {r(3, 4)}, rng));
  out.push_back(check_op("sqrt", [](Tape&, V v) { return sqrt(v[0]); }, {r(3, 4, 0.2, 3.0)}, rng));
  out.push_back(check_op("concat_cols", [](Tape&, V v) { return concat_cols({v[0], v[1], v[2]}); },
                         {r(3, 2), r(3, 1), r(3, 3)}, rng));
  out.push_back(check_op("split_cols",
                         [](Tape&, V v) {
                           auto parts = split_cols(v[0], {2, 3, 1});
                           return concat_cols({scale(parts[2], 2.0), parts[0], square(parts[1])});
                         },
                         {r(3, 6)}, rng));
  out.push_back(check_op("sum", [](Tape&, V v) { return sum(v[0]); }, {r(3, 4)}, rng));
  out.push_back(check_op("mean", [](Tape&, V v) { return mean(v[0]); }, {r(3, 4)}, rng));
  out.push_back(check_op("sum_of_squares", [](Tape&, V v) { return sum_of_squares(v[0]); },
                         {r(3, 4)}, rng));
  out.push_back(check_op("repeat_rows", [](Tape&, V v) { return repeat_rows(v[0], 4); },
                         {r(1, 3)}, rng));
  out.push_back(check_op("softmax_cross_entropy",
                         [](Tape&, V v) { return softmax_cross_entropy(v[0], {0, 3, 2}); },
                         {r(3, 5, -3, 3)}, rng));
  // Rate term with a real-valued y: the mass is smooth in all three inputs.
  out.push_back(check_op("gaussian_bits",
                         [](Tape&, V v) {
                           return gaussian_bits(v[0], v[1], add_scalar(softplus(v[2]), kScaleFloor),
                                                kLikelihoodFloor);
                         },
                         {r(3, 4, -3, 3), r(3, 4, -1, 1), r(3, 4, -1, 1.5)}, rng));

  // Combine rule: with the agreement mask frozen, combine_y0 must carry the
  // gradient of the surrogate (a + b) / 2 on agreeing positions.
  {
    Tensor a = r(3, 4, -3, 3);
    for (auto& v : a.data()) v = std::round(v);
    Tensor b = a;
    b[1] += 1.0;
    b[6] -= 2.0;
    Tensor mask(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) mask[i] = a[i] == b[i] ? 1.0 : 0.0;
    Tensor w = r(3, 4, -1, 1);
    Tape t;
    Var va = t.leaf(a), vb = t.leaf(b);
    t.backward(sum(mul(combine_y0(va, vb), t.constant(w))));
    const Tensor ga = t.grad(va), gb = t.grad(vb);
    GradReport rep{"combine_y0", 0.0};
    const OpFn surrogate = [&](Tape& tp, V v) {
      return mul(scale(add(v[0], v[1]), 0.5), tp.constant(mask));
    };
    // Forward values agree with the surrogate where the codes match.
    Tape tv;
    const Tensor fv = combine_y0(tv.constant(a), tv.constant(b)).value();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double want = mask[i] * a[i];
      rep.worst = std::max(rep.worst, std::abs(fv[i] - want));
    }
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        Tensor au = a, ad = a, bu = b, bd = b;
        (k == 0 ? au : bu)[i] += h;
        (k == 0 ? ad : bd)[i] -= h;
        Tape t1, t2;
        const double fu =
            sum(mul(surrogate(t1, {t1.leaf(au), t1.leaf(bu)}), t1.constant(w))).value().item();
        const double fd_ =
            sum(mul(surrogate(t2, {t2.leaf(ad), t2.leaf(bd)}), t2.constant(w))).value().item();
        const double fd = (fu - fd_) / (2 * h);
        const double an = (k == 0 ? ga : gb)[i];
        rep.worst = std::max(rep.worst,
                             std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0}));
      }
    }
    out.push_back(rep);
  }
  return out;
}

// Straight-through ops: forward rounds / clamps, backward is exactly identity.
inline bool straight_through_is_identity(std::uint64_t seed = 3) {
  Rng rng(seed);
  const Tensor x = random_tensor(rng, {4, 5}, -90.0, 90.0);
  const Tensor w = random_tensor(rng, {4, 5}, -1.0, 1.0);
  for (int which = 0; which < 2; ++which) {
    Tape t;
    Var vx = t.leaf(x);
    Var y = which == 0 ? st_quantize(vx) : st_clamp(vx, -kSymbolBound, kSymbolBound);
    t.backward(sum(mul(y, t.constant(w))));
    const Tensor g = t.grad(vx);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (g[i] != w[i]) return false;
      const double want = which == 0 ? round_half_away(x[i])
                                     : std::clamp(x[i], -1.0 * kSymbolBound, 1.0 * kSymbolBound);
      if (y.value()[i] != want) return false;
    }
  }
  return true;
}

}  // namespace gwn::testing
