#include "gwn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gwn {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

Tape& same_tape(std::initializer_list<Var> vars) {
  Tape* t = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw std::invalid_argument("autodiff: uninitialised Var");
    if (t && v.tape() != t) throw std::invalid_argument("autodiff: Vars from different tapes");
    t = v.tape();
  }
  return *t;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

void require_2d(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 2-D tensor, got " +
                                a.shape_string());
  }
}

double phi(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Elementwise unary op with derivative computed from (input, output).
template <class F, class D>
Var unary(Var a, F f, D df) {
  Tape& t = same_tape({a});
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const int ia = a.id();
  return t.record(std::move(out), {ia}, [ia, df](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& x = tp.value(ia);
    double* ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i]);
  });
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw std::invalid_argument("Var: not attached to a tape");
  return tape_->value(id_);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Tensor value, std::vector<int> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (int i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

double* Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad.data().data();
}

void Tape::accumulate(int id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  double* dst = grad_buffer(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss is on another tape");
  const int root = loss.id();
  if (nodes_[root].value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                nodes_[root].value.shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[root].requires_grad) return;
  grad_buffer(root)[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.size() == 0) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape({a, b});
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  require_2d("matmul", x);
  require_2d("matmul", w);
  if (x.cols() != w.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + x.shape_string() + " vs " +
                                w.shape_string());
  }
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  Tensor out({n, m}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double v = x[i * k + p];
      if (v == 0.0) continue;
      const double* wr = w.data().data() + p * m;
      double* o = &out[i * m];
      for (std::size_t j = 0; j < m; ++j) o[j] += v * wr[j];
    }
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib, n, k, m](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    const Tensor& w = tp.value(ib);
    if (tp.requires_grad(ia)) {
      double* ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * w[p * m + j];
          ga[i * k + p] += acc;
        }
    }
    if (tp.requires_grad(ib)) {
      double* gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double v = x[i * k + p];
          if (v == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += v * g[i * m + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape({a, b});
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape({a, b});
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) {
      double* gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape({a, b});
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(ib);
    if (tp.requires_grad(ia)) {
      double* ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (tp.requires_grad(ib)) {
      double* gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape({a, row});
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  require_2d("add_row", x);
  if (r.size() != x.cols()) {
    throw std::invalid_argument("add_row: shape mismatch " + x.shape_string() + " vs " +
                                r.shape_string());
  }
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out = x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += r[j];
  const int ia = a.id(), ir = row.id();
  return t.record(std::move(out), {ia, ir}, [ia, ir, n, m](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ir)) {
      double* gr = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gr[j] += g[i * m + j];
    }
  });
}

Var repeat_rows(Var row, std::size_t n) {
  Tape& t = same_tape({row});
  const Tensor& r = row.value();
  const std::size_t m = r.size();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = r[j];
  const int ir = row.id();
  return t.record(std::move(out), {ir}, [ir, n, m](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(ir)) return;
    double* gr = tp.grad_buffer(ir);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gr[j] += g[i * m + j];
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var elu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var sqrt(Var a) {
  for (double v : a.value().data())
    if (v < 0.0) throw std::invalid_argument("sqrt: negative input");
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = same_tape({parts.front()});
  const std::size_t n = parts.front().value().rows();
  std::vector<std::size_t> widths;
  std::vector<int> ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    same_tape({parts.front(), p});
    require_2d("concat_cols", p.value());
    if (p.value().rows() != n) {
      throw std::invalid_argument("concat_cols: shape mismatch " +
                                  parts.front().value().shape_string() + " vs " +
                                  p.value().shape_string());
    }
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += p.value().cols();
  }
  Tensor out({n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + off + j] = v[i * widths[k] + j];
    off += widths[k];
  }
  return t.record(std::move(out), ids, [ids, widths, n, total](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) {
        double* gk = tp.grad_buffer(ids[k]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) gk[i * widths[k] + j] += g[i * total + off + j];
      }
      off += widths[k];
    }
  });
}

std::vector<Var> split_cols(Var a, const std::vector<std::size_t>& widths) {
  Tape& t = same_tape({a});
  // Copied: recording parts may reallocate the tape's node storage.
  const Tensor x = a.value();
  require_2d("split_cols", x);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  if (total != x.cols()) {
    throw std::invalid_argument("split_cols: widths sum to " + std::to_string(total) +
                                " but input is " + x.shape_string());
  }
  const std::size_t n = x.rows();
  std::vector<Var> out;
  std::size_t off = 0;
  const int ia = a.id();
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("split_cols: zero-width part");
    Tensor part({n, w});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) part[i * w + j] = x[i * total + off + j];
    out.push_back(t.record(std::move(part), {ia}, [ia, n, w, off, total](Tape& tp, const Tensor& g) {
      if (!tp.requires_grad(ia)) return;
      double* ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) ga[i * total + off + j] += g[i * w + j];
    }));
    off += w;
  }
  return out;
}

Var sum(Var a) {
  Tape& t = same_tape({a});
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const int ia = a.id();
  return t.record(Tensor::scalar(s), {ia}, [ia](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(ia)) return;
    double* ga = tp.grad_buffer(ia);
    const std::size_t n = tp.value(ia).size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_of_squares(Var a) {
  Tape& t = same_tape({a});
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  const int ia = a.id();
  return t.record(Tensor::scalar(s), {ia}, [ia](Tape& tp, const Tensor& g) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& x = tp.value(ia);
    double* ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += 2.0 * x[i] * g[0];
  });
}

Var st_quantize(Var a) {
  return unary(a, [](double x) { return round_half_away(x); }, [](double) { return 1.0; });
}

Var st_clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [](double) { return 1.0; });
}

Var combine_y0(Var a, Var b) {
  Tape& t = same_tape({a, b});
  require_same_shape("combine_y0", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] == y[i] ? 0.5 * (x[i] + y[i]) : 0.0;
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(ib);
    for (int id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      double* gd = tp.grad_buffer(id);
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == y[i]) gd[i] += 0.5 * g[i];
    }
  });
}

double gaussian_mass(double y, double mu, double s) {
  const double a = (y + 0.5 - mu) / s;
  const double b = (y - 0.5 - mu) / s;
  if (b > 0.0) return 0.5 * (std::erfc(b * kInvSqrt2) - std::erfc(a * kInvSqrt2));
  if (a < 0.0) return 0.5 * (std::erfc(-a * kInvSqrt2) - std::erfc(-b * kInvSqrt2));
  return 1.0 - 0.5 * std::erfc(a * kInvSqrt2) - 0.5 * std::erfc(-b * kInvSqrt2);
}

Var gaussian_bits(Var y, Var mean, Var scale, double floor) {
  Tape& t = same_tape({y, mean, scale});
  require_same_shape("gaussian_bits", y.value(), mean.value());
  require_same_shape("gaussian_bits", y.value(), scale.value());
  const Tensor& yv = y.value();
  const Tensor& mv = mean.value();
  const Tensor& sv = scale.value();
  Tensor out(yv.shape());
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (!(sv[i] > 0.0)) throw std::invalid_argument("gaussian_bits: scale must be > 0");
    out[i] = -std::log2(std::max(gaussian_mass(yv[i], mv[i], sv[i]), floor));
  }
  const int iy = y.id(), im = mean.id(), is = scale.id();
  return t.record(std::move(out), {iy, im, is}, [iy, im, is, floor](Tape& tp, const Tensor& g) {
    const Tensor& yv = tp.value(iy);
    const Tensor& mv = tp.value(im);
    const Tensor& sv = tp.value(is);
    double* gy = tp.requires_grad(iy) ? tp.grad_buffer(iy) : nullptr;
    double* gm = tp.requires_grad(im) ? tp.grad_buffer(im) : nullptr;
    double* gs = tp.requires_grad(is) ? tp.grad_buffer(is) : nullptr;
    for (std::size_t i = 0; i < yv.size(); ++i) {
      const double p = gaussian_mass(yv[i], mv[i], sv[i]);
      if (p < floor) continue;  // floored: flat
      const double s = sv[i];
      const double a = (yv[i] + 0.5 - mv[i]) / s;
      const double b = (yv[i] - 0.5 - mv[i]) / s;
      const double dp_dy = (phi(a) - phi(b)) / s;
      const double dp_ds = -(a * phi(a) - b * phi(b)) / s;
      const double dbits_dp = -1.0 / (p * kLn2);
      if (gy) gy[i] += g[i] * dbits_dp * dp_dy;
      if (gm) gm[i] -= g[i] * dbits_dp * dp_dy;
      if (gs) gs[i] += g[i] * dbits_dp * dp_ds;
    }
  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  Tape& t = same_tape({logits});
  const Tensor& z = logits.value();
  require_2d("softmax_cross_entropy", z);
  const std::size_t n = z.rows(), k = z.cols();
  if (labels.size() != n) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + z.shape_string() + " logits");
  }
  Tensor prob({n, k});
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    const double* r = z.data().data() + i * k;
    const double m = *std::max_element(r, r + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(r[j] - m);
    for (std::size_t j = 0; j < k; ++j) prob[i * k + j] = std::exp(r[j] - m) / total;
    loss += m + std::log(total) - r[labels[i]];
  }
  const int il = logits.id();
  return t.record(Tensor::scalar(loss / n), {il},
                  [il, prob = std::move(prob), labels, n, k](Tape& tp, const Tensor& g) {
                    if (!tp.requires_grad(il)) return;
                    double* gl = tp.grad_buffer(il);
                    const double c = g[0] / static_cast<double>(n);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < k; ++j) {
                        const double target = static_cast<int>(j) == labels[i] ? 1.0 : 0.0;
                        gl[i * k + j] += c * (prob[i * k + j] - target);
                      }
                  });
}

}  // namespace gwn
