// Learnable three-channel codec: analysis transforms produce a common code Y0
// and private codes Y1, Y2; each task decoder reads its private code
// concatenated with Y0. Rates come from discretised-Gaussian entropy models,
// with the private models conditioned on Y0.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gwn/autodiff.hpp"
#include "gwn/nn.hpp"

namespace gwn {

enum class Arch { kShared, kSeparated, kCombined, kJoint, kIndependent };

Arch arch_from_string(const std::string& s);
std::string to_string(Arch a);

enum class TaskKind { kRegression, kClassification };

inline constexpr double kLikelihoodFloor = 1.0 / 65536.0;  // 2^-16
inline constexpr double kScaleFloor = 1e-6;
// Quantised latents are clamped to [-kSymbolBound, kSymbolBound].
inline constexpr int kSymbolBound = 64;

struct CodecConfig {
  Arch arch = Arch::kShared;
  std::size_t latent_dim = 8;  // E
  std::size_t hidden = 0;      // 0 => 4E
  double beta = 1.0;
  double eta = 0.1;
  double gamma = 1.0;
  double lambda1 = 10.0;
  double lambda2 = 10.0;
  std::uint64_t seed = 1;
  // Robustness harness: Y0 is taken from the first transform unchanged.
  bool combine_passthrough = false;
};

void validate(const CodecConfig& cfg);

struct TaskShape {
  TaskKind kind = TaskKind::kRegression;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;  // regression width or number of classes
};

struct CodecShape {
  TaskShape task1;
  TaskShape task2;
};

// One minibatch. Regression tasks read z1/z2, classification tasks labels.
struct Batch {
  Tensor x1, x2;  // [n, input_dim]
  Tensor z1, z2;  // [n, output_dim]
  std::vector<int> label1, label2;
  std::size_t size() const { return x1.rows(); }
};

struct ChannelCodes {
  Tensor y0, y1, y2;  // empty tensors for absent channels
  Tensor y0_from_1, y0_from_2;
};

struct ForwardPass {
  Var y0, y1, y2, y0_from_1, y0_from_2;  // invalid when absent
  Var pred1, pred2;
  Var r0, r1, r2;  // bits per sample
  Var d1, d2;      // task losses
  Var aux;
  Var loss;
};

// Per-element entropy-model parameters for one channel.
struct ChannelModel {
  Tensor mean;
  Tensor scale;
};

class GwnCodec {
 public:
  GwnCodec(const CodecConfig& cfg, const CodecShape& shape);

  const CodecConfig& config() const { return cfg_; }
  const CodecShape& shape() const { return shape_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // Width of channel 0, 1 or 2; 0 when the architecture omits it.
  std::size_t channel_width(int channel) const;

  // Builds the full training graph on `tape` (binding the parameters).
  // Without `noise` the rates are the code lengths of the integer codes. With
  // it, rates are taken at the clamped pre-quantisation values plus
  // uniform(-1/2, 1/2) noise, a smooth stand-in used for training; decoders
  // still read the integer codes.
  ForwardPass forward(Tape& tape, const Batch& batch, Rng* noise = nullptr);

  // Numeric inference without gradients.
  ChannelCodes encode(const Batch& batch);
  // Models for decoding channel `channel` (1 or 2 may depend on y0).
  ChannelModel channel_model(int channel, const Tensor& y0, std::size_t n);
  // Task predictions from decoded codes.
  std::pair<Tensor, Tensor> predict(const ChannelCodes& codes);

 private:
  struct Latents {
    Var y0, y1, y2, y0a, y0b;  // integer codes, straight-through gradients
    Var c0, c1, c2;            // clamped values before rounding
  };
  Latents analysis(Tape& tape, const Batch& b) const;
  std::pair<Var, Var> private_model(int channel, Tape& tape, Var y0, std::size_t n) const;
  std::pair<Var, Var> common_model(Tape& tape, std::size_t n) const;
  Var synthesis(int task, Var yi, Var y0) const;

  CodecConfig cfg_;
  CodecShape shape_;
  ParamStore store_;
  std::size_t w0_ = 0, w1_ = 0, w2_ = 0;
  Mlp f1_, f2_, f0_;    // analysis transforms (usage depends on arch)
  Mlp g1_, g2_;         // synthesis transforms
  Mlp h1_, h2_;         // conditional entropy heads on Y0
  Parameter* mu0_ = nullptr;
  Parameter* s0_ = nullptr;
  Parameter* mu1_ = nullptr;  // unconditional private models when Y0 is absent
  Parameter* s1_ = nullptr;
  Parameter* mu2_ = nullptr;
  Parameter* s2_ = nullptr;
};

// Augmented objective assembled from its parts:
//   eta * (beta r0 + r1 + r2 + lambda1 d1 + lambda2 d2) + aux.
double augmented_loss_value(const CodecConfig& cfg, double r0, double r1, double r2, double d1,
                            double d2, double aux);

}  // namespace gwn
