#include "gwn/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "gwn/pmf.hpp"

namespace gwn {
namespace {

// softplus(kUnitScaleRaw) = 1
constexpr double kUnitScaleRaw = 0.54132485461291810;

Var zero(Tape& t) { return t.constant(Tensor::scalar(0.0)); }

Var positive_scale(Var raw) { return add_scalar(softplus(raw), kScaleFloor); }

Var channel_bits(Var y, Var mean, Var scale, std::size_t n) {
  return gwn::scale(sum(gaussian_bits(y, mean, scale, kLikelihoodFloor)),
                    1.0 / static_cast<double>(n));
}

}  // namespace

Arch arch_from_string(const std::string& s) {
  if (s == "shared") return Arch::kShared;
  if (s == "separated") return Arch::kSeparated;
  if (s == "combined") return Arch::kCombined;
  if (s == "joint") return Arch::kJoint;
  if (s == "independent") return Arch::kIndependent;
  throw ValidationError("unknown architecture '" + s + "'");
}

std::string to_string(Arch a) {
  switch (a) {
    case Arch::kShared: return "shared";
    case Arch::kSeparated: return "separated";
    case Arch::kCombined: return "combined";
    case Arch::kJoint: return "joint";
    case Arch::kIndependent: return "independent";
  }
  return "unknown";
}

void validate(const CodecConfig& c) {
  if (c.latent_dim == 0) throw ValidationError("latent_dim must be >= 1");
  if (!(c.beta > 0.0)) throw ValidationError("beta must be > 0");
  if (!(c.eta > 0.0)) throw ValidationError("eta must be > 0");
  if (!(c.gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (!(c.lambda1 >= 0.0) || !(c.lambda2 >= 0.0)) throw ValidationError("lambdas must be >= 0");
}

double augmented_loss_value(const CodecConfig& cfg, double r0, double r1, double r2, double d1,
                            double d2, double aux) {
  return cfg.eta * (cfg.beta * r0 + r1 + r2 + cfg.lambda1 * d1 + cfg.lambda2 * d2) + aux;
}

GwnCodec::GwnCodec(const CodecConfig& cfg, const CodecShape& shape) : cfg_(cfg), shape_(shape) {
  validate(cfg);
  for (const TaskShape* t : {&shape.task1, &shape.task2}) {
    if (t->input_dim == 0 || t->output_dim == 0) throw ValidationError("task widths must be >= 1");
    if (t->kind == TaskKind::kClassification && t->output_dim < 2) {
      throw ValidationError("classification needs at least two classes");
    }
  }
  const std::size_t e = cfg.latent_dim;
  const std::size_t h = cfg.hidden == 0 ? 4 * e : cfg.hidden;
  const std::size_t in1 = shape.task1.input_dim;
  const std::size_t in2 = shape.task2.input_dim;
  Rng rng = Rng(cfg.seed).split(100);

  switch (cfg.arch) {
    case Arch::kShared:
      w0_ = w1_ = w2_ = e;
      f1_ = Mlp(store_, "analysis1", {in1, h, h, 2 * e}, rng);
      f2_ = Mlp(store_, "analysis2", {in2, h, h, 2 * e}, rng);
      break;
    case Arch::kSeparated:
      w0_ = w1_ = w2_ = e;
      f1_ = Mlp(store_, "analysis1", {in1, h, h, e}, rng);
      f2_ = Mlp(store_, "analysis2", {in2, h, h, e}, rng);
      f0_ = Mlp(store_, "analysis0", {in1 + in2, h, h, e}, rng);
      break;
    case Arch::kCombined:
      w0_ = w1_ = w2_ = e;
      f0_ = Mlp(store_, "analysis", {in1 + in2, h, h, 3 * e}, rng);
      break;
    case Arch::kJoint:
      w0_ = 2 * e;
      f0_ = Mlp(store_, "analysis", {in1 + in2, h, h, 2 * e}, rng);
      break;
    case Arch::kIndependent:
      w1_ = w2_ = e;
      f1_ = Mlp(store_, "analysis1", {in1, h, h, e}, rng);
      f2_ = Mlp(store_, "analysis2", {in2, h, h, e}, rng);
      break;
  }
  g1_ = Mlp(store_, "synthesis1", {w1_ + w0_, h, h, shape.task1.output_dim}, rng);
  g2_ = Mlp(store_, "synthesis2", {w2_ + w0_, h, h, shape.task2.output_dim}, rng);

  auto unconditional = [&](const std::string& name, std::size_t w, Parameter*& mu,
                           Parameter*& s) {
    mu = &store_.add(name + ".mean", Tensor({1, w}, 0.0));
    s = &store_.add(name + ".scale_raw", Tensor({1, w}, kUnitScaleRaw));
  };
  if (w0_ > 0) unconditional("entropy0", w0_, mu0_, s0_);
  if (w1_ > 0) {
    if (w0_ > 0) h1_ = Mlp(store_, "entropy1", {w0_, h, 2 * w1_}, rng);
    else unconditional("entropy1", w1_, mu1_, s1_);
  }
  if (w2_ > 0) {
    if (w0_ > 0) h2_ = Mlp(store_, "entropy2", {w0_, h, 2 * w2_}, rng);
    else unconditional("entropy2", w2_, mu2_, s2_);
  }
}

std::size_t GwnCodec::channel_width(int channel) const {
  switch (channel) {
    case 0: return w0_;
    case 1: return w1_;
    case 2: return w2_;
  }
  throw std::invalid_argument("channel must be 0, 1 or 2");
}

GwnCodec::Latents GwnCodec::analysis(Tape& tape, const Batch& b) const {
  if (b.x1.rank() != 2 || b.x1.cols() != shape_.task1.input_dim || b.x2.rank() != 2 ||
      b.x2.cols() != shape_.task2.input_dim || b.x1.rows() != b.x2.rows()) {
    throw std::invalid_argument("codec: input shapes " + b.x1.shape_string() + " and " +
                                b.x2.shape_string() + " do not match the codec");
  }
  const Var x1 = tape.constant(b.x1);
  const Var x2 = tape.constant(b.x2);
  const std::size_t e = cfg_.latent_dim;
  auto clamp = [](Var v) { return st_clamp(v, -kSymbolBound, kSymbolBound); };
  Latents l;
  switch (cfg_.arch) {
    case Arch::kShared: {
      const auto a = split_cols(f1_.forward(x1), {e, e});
      const auto c = split_cols(f2_.forward(x2), {e, e});
      l.c1 = clamp(a[0]);
      l.c2 = clamp(c[0]);
      const Var c0a = clamp(a[1]);
      const Var c0b = clamp(c[1]);
      l.y0a = st_quantize(c0a);
      l.y0b = st_quantize(c0b);
      if (cfg_.combine_passthrough) {
        l.y0 = l.y0a;
        l.c0 = c0a;
      } else {
        l.y0 = combine_y0(l.y0a, l.y0b);
        // Continuous counterpart of the combine rule: mean of the halves where
        // the codes agree, zero elsewhere.
        Tensor mask(l.y0.value().shape(), 0.0);
        for (std::size_t i = 0; i < mask.size(); ++i)
          mask[i] = l.y0a.value()[i] == l.y0b.value()[i] ? 0.5 : 0.0;
        l.c0 = mul(add(c0a, c0b), tape.constant(std::move(mask)));
      }
      break;
    }
    case Arch::kSeparated:
      l.c1 = clamp(f1_.forward(x1));
      l.c2 = clamp(f2_.forward(x2));
      l.c0 = clamp(f0_.forward(concat_cols({x1, x2})));
      break;
    case Arch::kCombined: {
      const auto parts = split_cols(f0_.forward(concat_cols({x1, x2})), {e, e, e});
      l.c0 = clamp(parts[0]);
      l.c1 = clamp(parts[1]);
      l.c2 = clamp(parts[2]);
      break;
    }
    case Arch::kJoint:
      l.c0 = clamp(f0_.forward(concat_cols({x1, x2})));
      break;
    case Arch::kIndependent:
      l.c1 = clamp(f1_.forward(x1));
      l.c2 = clamp(f2_.forward(x2));
      break;
  }
  if (!l.y0.valid() && l.c0.valid()) l.y0 = st_quantize(l.c0);
  if (l.c1.valid()) l.y1 = st_quantize(l.c1);
  if (l.c2.valid()) l.y2 = st_quantize(l.c2);
  return l;
}

std::pair<Var, Var> GwnCodec::common_model(Tape&, std::size_t n) const {
  return {repeat_rows(mu0_->var, n), positive_scale(repeat_rows(s0_->var, n))};
}

std::pair<Var, Var> GwnCodec::private_model(int channel, Tape&, Var y0, std::size_t n) const {
  const std::size_t w = channel == 1 ? w1_ : w2_;
  if (w0_ > 0) {
    const Mlp& head = channel == 1 ? h1_ : h2_;
    const auto parts = split_cols(head.forward(y0), {w, w});
    return {parts[0], positive_scale(parts[1])};
  }
  Parameter* mu = channel == 1 ? mu1_ : mu2_;
  Parameter* s = channel == 1 ? s1_ : s2_;
  return {repeat_rows(mu->var, n), positive_scale(repeat_rows(s->var, n))};
}

Var GwnCodec::synthesis(int task, Var yi, Var y0) const {
  std::vector<Var> parts;
  if (yi.valid()) parts.push_back(yi);
  if (y0.valid()) parts.push_back(y0);
  const Var in = parts.size() == 1 ? parts[0] : concat_cols(parts);
  return (task == 1 ? g1_ : g2_).forward(in);
}

ForwardPass GwnCodec::forward(Tape& tape, const Batch& b, Rng* noise) {
  store_.bind(tape);
  ForwardPass f;
  const std::size_t n = b.size();
  const Latents l = analysis(tape, b);
  f.y0 = l.y0;
  f.y1 = l.y1;
  f.y2 = l.y2;
  f.y0_from_1 = l.y0a;
  f.y0_from_2 = l.y0b;
  auto rate_input = [&](Var y, Var c) {
    if (!noise) return y;
    Tensor u(c.value().shape());
    for (double& v : u.data()) v = noise->uniform() - 0.5;
    return add(c, tape.constant(std::move(u)));
  };

  if (f.y0.valid()) {
    const auto [m, s] = common_model(tape, n);
    f.r0 = channel_bits(rate_input(f.y0, l.c0), m, s, n);
  } else {
    f.r0 = zero(tape);
  }
  if (f.y1.valid()) {
    const auto [m, s] = private_model(1, tape, f.y0, n);
    f.r1 = channel_bits(rate_input(f.y1, l.c1), m, s, n);
  } else {
    f.r1 = zero(tape);
  }
  if (f.y2.valid()) {
    const auto [m, s] = private_model(2, tape, f.y0, n);
    f.r2 = channel_bits(rate_input(f.y2, l.c2), m, s, n);
  } else {
    f.r2 = zero(tape);
  }

  f.pred1 = synthesis(1, f.y1, f.y0);
  f.pred2 = synthesis(2, f.y2, f.y0);
  auto task_loss = [&](const TaskShape& t, Var pred, const Tensor& z,
                       const std::vector<int>& labels) {
    if (t.kind == TaskKind::kClassification) return softmax_cross_entropy(pred, labels);
    if (!z.same_shape(pred.value())) {
      throw std::invalid_argument("codec: target shape " + z.shape_string() +
                                  " does not match prediction " + pred.value().shape_string());
    }
    return sqrt(mean(square(sub(pred, tape.constant(z)))));
  };
  f.d1 = task_loss(shape_.task1, f.pred1, b.z1, b.label1);
  f.d2 = task_loss(shape_.task2, f.pred2, b.z2, b.label2);

  if (f.y0_from_1.valid() && f.y0_from_2.valid() && cfg_.gamma > 0.0) {
    f.aux = scale(mean(square(sub(f.y0_from_1, f.y0_from_2))), cfg_.gamma);
  } else {
    f.aux = zero(tape);
  }
  Var rates = add(add(scale(f.r0, cfg_.beta), f.r1), f.r2);
  Var dist = add(scale(f.d1, cfg_.lambda1), scale(f.d2, cfg_.lambda2));
  f.loss = add(scale(add(rates, dist), cfg_.eta), f.aux);
  return f;
}

ChannelCodes GwnCodec::encode(const Batch& b) {
  Tape tape;
  store_.bind(tape);
  const Latents l = analysis(tape, b);
  ChannelCodes c;
  if (l.y0.valid()) c.y0 = l.y0.value();
  if (l.y1.valid()) c.y1 = l.y1.value();
  if (l.y2.valid()) c.y2 = l.y2.value();
  if (l.y0a.valid()) c.y0_from_1 = l.y0a.value();
  if (l.y0b.valid()) c.y0_from_2 = l.y0b.value();
  return c;
}

ChannelModel GwnCodec::channel_model(int channel, const Tensor& y0, std::size_t n) {
  if (channel_width(channel) == 0) throw std::invalid_argument("channel is absent in this arch");
  Tape tape;
  store_.bind(tape);
  std::pair<Var, Var> ms;
  if (channel == 0) {
    ms = common_model(tape, n);
  } else {
    Var y0v;
    if (w0_ > 0) {
      if (y0.rank() != 2 || y0.rows() != n || y0.cols() != w0_) {
        throw std::invalid_argument("channel_model: common code has shape " + y0.shape_string());
      }
      y0v = tape.constant(y0);
    }
    ms = private_model(channel, tape, y0v, n);
  }
  return {ms.first.value(), ms.second.value()};
}

std::pair<Tensor, Tensor> GwnCodec::predict(const ChannelCodes& c) {
  Tape tape;
  store_.bind(tape);
  const Var y0 = w0_ > 0 ? tape.constant(c.y0) : Var();
  const Var y1 = w1_ > 0 ? tape.constant(c.y1) : Var();
  const Var y2 = w2_ > 0 ? tape.constant(c.y2) : Var();
  return {synthesis(1, y1, y0).value(), synthesis(2, y2, y0).value()};
}

}  // namespace gwn
