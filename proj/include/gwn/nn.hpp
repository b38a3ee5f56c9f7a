// Trainable parameters, dense layers and the Adam optimiser.
#pragma once

#include <deque>
#include <string>
#include <vector>

#include "gwn/autodiff.hpp"
#include "gwn/rng.hpp"

namespace gwn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Var var;  // binding on the current tape
};

// Owns parameters at stable addresses.
class ParamStore {
 public:
  Parameter& add(std::string name, Tensor init);

  // Registers every parameter as a leaf of `tape`.
  void bind(Tape& tape);
  // Copies gradients out of `tape` after backward().
  void collect_grads(const Tape& tape);
  void zero_grads();

  std::deque<Parameter>& params() { return params_; }
  const std::deque<Parameter>& params() const { return params_; }
  Parameter* find(const std::string& name);
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

class Dense {
 public:
  Dense() = default;
  // Weights ~ N(0, 1/in), bias 0.
  Dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var forward(Var x) const;
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

// Dense layers with ELU between them and a linear output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, const std::vector<std::size_t>& widths,
      Rng& rng);
  Var forward(Var x) const;
  std::size_t in() const { return layers_.front().in(); }
  std::size_t out() const { return layers_.back().out(); }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<Dense> layers_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

// One Adam update. Gradients are first rescaled so their global L2 norm is
// at most clip_norm. Returns the norm before clipping.
double adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                 AdamState& state, const AdamOptions& opts);

double adam_step(ParamStore& store, AdamState& state, const AdamOptions& opts);

}  // namespace gwn
