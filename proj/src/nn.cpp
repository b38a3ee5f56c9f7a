#include "gwn/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gwn {

Parameter& ParamStore::add(std::string name, Tensor init) {
  if (find(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  Parameter p;
  p.name = std::move(name);
  p.grad = Tensor(init.shape(), 0.0);
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

void ParamStore::bind(Tape& tape) {
  for (Parameter& p : params_) p.var = tape.leaf(p.value, true);
}

void ParamStore::collect_grads(const Tape& tape) {
  for (Parameter& p : params_) p.grad = tape.grad(p.var);
}

void ParamStore::zero_grads() {
  for (Parameter& p : params_) p.grad = Tensor(p.value.shape(), 0.0);
}

Parameter* ParamStore::find(const std::string& name) {
  for (Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

Dense::Dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
             Rng& rng)
    : in_(in), out_(out) {
  if (in == 0 || out == 0) throw std::invalid_argument("Dense: zero width");
  Tensor w({in, out});
  const double sd = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : w.data()) v = sd * rng.normal();
  w_ = &store.add(name + ".weight", std::move(w));
  b_ = &store.add(name + ".bias", Tensor({1, out}, 0.0));
}

Var Dense::forward(Var x) const {
  if (!w_->var.valid() || w_->var.tape() != x.tape()) {
    throw std::invalid_argument("Dense: parameters are not bound to the input's tape");
  }
  return add_row(matmul(x, w_->var), b_->var);
}

Mlp::Mlp(ParamStore& store, const std::string& name, const std::vector<std::size_t>& widths,
         Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    layers_.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
}

Var Mlp::forward(Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(x);
    if (i + 1 < layers_.size()) x = elu(x);
  }
  return x;
}

double adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                 AdamState& state, const AdamOptions& opts) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: count mismatch");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape(), 0.0);
      state.v.emplace_back(p->shape(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state mismatch");
  double sq = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.m[k])) {
      throw std::invalid_argument("adam_step: shape mismatch " + params[k]->shape_string() +
                                  " vs " + grads[k]->shape_string());
    }
    for (double g : grads[k]->data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double c = (opts.clip_norm > 0.0 && norm > opts.clip_norm) ? opts.clip_norm / norm : 1.0;
  ++state.step;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = c * g[i];
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * gi;
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * gi * gi;
      p[i] -= opts.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.eps);
    }
  }
  return norm;
}

double adam_step(ParamStore& store, AdamState& state, const AdamOptions& opts) {
  std::vector<Tensor*> ps;
  std::vector<const Tensor*> gs;
  for (Parameter& p : store.params()) {
    ps.push_back(&p.value);
    gs.push_back(&p.grad);
  }
  return adam_step(ps, gs, state, opts);
}

}  // namespace gwn
