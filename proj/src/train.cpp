#include "gwn/train.hpp"

#include <cmath>
#include <sstream>

namespace gwn {
namespace {

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  std::size_t hit = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    if (static_cast<int>(best) == labels[r]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(logits.rows());
}

Metrics read_metrics(const ForwardPass& f, const Batch& b, const CodecShape& shape) {
  Metrics m;
  m.r0 = f.r0.value().item();
  m.r1 = f.r1.value().item();
  m.r2 = f.r2.value().item();
  m.d1 = f.d1.value().item();
  m.d2 = f.d2.value().item();
  m.aux = f.aux.value().item();
  m.loss = f.loss.value().item();
  if (shape.task1.kind == TaskKind::kClassification) m.acc1 = accuracy(f.pred1.value(), b.label1);
  if (shape.task2.kind == TaskKind::kClassification) m.acc2 = accuracy(f.pred2.value(), b.label2);
  return m;
}

std::string describe(std::size_t step, const Metrics& m, double grad_norm) {
  std::ostringstream os;
  os << "training diverged at step " << step << ": loss=" << m.loss << " r0=" << m.r0
     << " r1=" << m.r1 << " r2=" << m.r2 << " d1=" << m.d1 << " d2=" << m.d2
     << " aux=" << m.aux << " grad_norm=" << grad_norm;
  return os.str();
}

}  // namespace

SourceKind source_kind_from_string(const std::string& s) {
  if (s == "synthetic") return SourceKind::kSynthetic;
  if (s == "attribute") return SourceKind::kAttribute;
  throw ValidationError("unknown source kind '" + s + "'");
}

std::string to_string(SourceKind k) {
  return k == SourceKind::kSynthetic ? "synthetic" : "attribute";
}

DataSource::DataSource(const DataSpec& spec) : spec_(spec) {
  if (spec.kind == SourceKind::kSynthetic) {
    synthetic_ = std::make_shared<SyntheticSource>(spec.synthetic);
  } else {
    attribute_ = std::make_shared<AttributeSource>(spec.attribute);
  }
}

CodecShape DataSource::shape() const {
  CodecShape s;
  if (synthetic_) {
    const std::size_t d = spec_.synthetic.height * spec_.synthetic.width;
    s.task1 = {TaskKind::kRegression, d, d};
    s.task2 = {TaskKind::kRegression, d, d};
  } else {
    const std::size_t d = spec_.attribute.embedding_dim;
    s.task1 = {TaskKind::kClassification, d, kAttributeClasses};
    s.task2 = {TaskKind::kClassification, d, kAttributeClasses};
  }
  return s;
}

double DataSource::pixels() const {
  if (synthetic_) return static_cast<double>(spec_.synthetic.height * spec_.synthetic.width);
  return 1.0;
}

Batch DataSource::batch(std::size_t n, std::uint64_t index) const {
  Batch b;
  if (synthetic_) {
    SyntheticBatch s = synthetic_->sample_batch(n, index);
    const std::size_t d = s.height * s.width;
    // Symbols span [-4, 4]; halving keeps first-layer activations near unit scale.
    for (double& v : s.x1) v *= 0.5;
    for (double& v : s.x2) v *= 0.5;
    b.x1 = Tensor::matrix(n, d, std::move(s.x1));
    b.x2 = Tensor::matrix(n, d, std::move(s.x2));
    b.z1 = Tensor::matrix(n, d, std::move(s.z1));
    b.z2 = Tensor::matrix(n, d, std::move(s.z2));
  } else {
    AttributeBatch a = attribute_->sample_batch(n, index);
    b.x1 = Tensor::matrix(n, a.dim, a.input);
    b.x2 = Tensor::matrix(n, a.dim, std::move(a.input));
    b.label1 = std::move(a.digit);
    b.label2 = std::move(a.color);
  }
  return b;
}

Metrics evaluate(GwnCodec& codec, const DataSource& data, std::size_t batches,
                 std::size_t batch_size) {
  if (batches == 0 || batch_size == 0) throw ValidationError("evaluate: empty validation set");
  Metrics sum;
  sum.acc1 = sum.acc2 = 0.0;
  for (std::size_t k = 0; k < batches; ++k) {
    const Batch b = data.batch(batch_size, kValidationBatchBase + k);
    Tape tape;
    const ForwardPass f = codec.forward(tape, b);
    const Metrics m = read_metrics(f, b, codec.shape());
    sum.r0 += m.r0;
    sum.r1 += m.r1;
    sum.r2 += m.r2;
    sum.d1 += m.d1;
    sum.d2 += m.d2;
    sum.acc1 += m.acc1;
    sum.acc2 += m.acc2;
    sum.aux += m.aux;
    sum.loss += m.loss;
  }
  const double inv = 1.0 / static_cast<double>(batches);
  for (double* v : {&sum.r0, &sum.r1, &sum.r2, &sum.d1, &sum.d2, &sum.acc1, &sum.acc2, &sum.aux,
                    &sum.loss})
    *v *= inv;
  return sum;
}

TrainResult train(GwnCodec& codec, const DataSource& data, const TrainOptions& opts,
                  const ProgressFn& progress) {
  if (opts.steps == 0 || opts.batch_size == 0 || opts.val_every == 0) {
    throw ValidationError("train: steps, batch_size and val_every must be >= 1");
  }
  ParamStore& store = codec.params();
  AdamState adam;
  TrainResult res;
  std::vector<Tensor> best_params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  auto validate_now = [&](std::size_t step) {
    const Metrics m = evaluate(codec, data, opts.val_batches, opts.val_batch_size);
    res.val_history.push_back(m.loss);
    if (progress) progress(step, m);
    if (!std::isfinite(m.loss)) throw NumericalError(describe(step, m, 0.0));
    if (m.loss < best_loss) {
      best_loss = m.loss;
      res.best = m;
      res.best_step = step;
      best_params.clear();
      for (const Parameter& p : store.params()) best_params.push_back(p.value);
      since_best = 0;
    } else {
      ++since_best;
    }
  };

  for (std::size_t step = 0; step < opts.steps; ++step) {
    const Batch b = data.batch(opts.batch_size, step);
    Tape tape;
    Rng noise = Rng(codec.config().seed).split(3).split(step);
    const ForwardPass f = codec.forward(tape, b, &noise);
    if (!std::isfinite(f.loss.value().item())) {
      throw NumericalError(describe(step, read_metrics(f, b, codec.shape()), 0.0));
    }
    tape.backward(f.loss);
    store.collect_grads(tape);
    const double norm = adam_step(store, adam, opts.adam);
    if (!std::isfinite(norm)) {
      throw NumericalError(describe(step, read_metrics(f, b, codec.shape()), norm));
    }
    res.steps_run = step + 1;
    if ((step + 1) % opts.val_every == 0 || step + 1 == opts.steps) {
      validate_now(step + 1);
      if (since_best >= opts.patience) {
        res.early_stopped = true;
        break;
      }
    }
  }

  std::size_t i = 0;
  for (Parameter& p : store.params()) p.value = best_params[i++];
  const CodecConfig& c = codec.config();
  res.point = make_rate_point(to_string(c.arch), c.beta, c.eta, c.seed, res.best.r0,
                              res.best.r1, res.best.r2, res.best.d1, res.best.d2);
  res.point.acc1 = res.best.acc1;
  res.point.acc2 = res.best.acc2;
  return res;
}

}  // namespace gwn
