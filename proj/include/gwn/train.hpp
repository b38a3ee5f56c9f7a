// Training data adapters and the early-stopped Adam training loop.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gwn/codec.hpp"
#include "gwn/evaluation.hpp"
#include "gwn/source_gen.hpp"

namespace gwn {

enum class SourceKind { kSynthetic, kAttribute };

SourceKind source_kind_from_string(const std::string& s);
std::string to_string(SourceKind k);

struct DataSpec {
  SourceKind kind = SourceKind::kSynthetic;
  SyntheticSourceSpec synthetic;
  AttributePmfSpec attribute;
};

// Turns a seeded source into codec batches. Synthetic: two regression tasks
// from the two channels. Attribute: both encoders see the same vector, task 1
// classifies the digit and task 2 the colour.
class DataSource {
 public:
  explicit DataSource(const DataSpec& spec);

  const DataSpec& spec() const { return spec_; }
  CodecShape shape() const;
  // Elements per sample used for bits-per-pixel scaling (H*W; 1 for attributes).
  double pixels() const;

  Batch batch(std::size_t n, std::uint64_t index) const;

  const SyntheticSource* synthetic() const { return synthetic_.get(); }
  const AttributeSource* attribute() const { return attribute_.get(); }

 private:
  DataSpec spec_;
  std::shared_ptr<SyntheticSource> synthetic_;
  std::shared_ptr<AttributeSource> attribute_;
};

// Validation batches use indices from this offset so they never coincide with
// training batches.
inline constexpr std::uint64_t kValidationBatchBase = 1ull << 40;

struct TrainOptions {
  std::size_t steps = 3000;
  std::size_t batch_size = 100;
  std::size_t val_every = 100;
  std::size_t val_batches = 4;
  std::size_t val_batch_size = 250;
  std::size_t patience = 10;  // validations without improvement
  AdamOptions adam{};
};

struct Metrics {
  double r0 = 0.0, r1 = 0.0, r2 = 0.0;  // bits per sample
  double d1 = 0.0, d2 = 0.0;
  double acc1 = -1.0, acc2 = -1.0;
  double aux = 0.0;
  double loss = 0.0;
};

// Averages over `batches` validation batches.
Metrics evaluate(GwnCodec& codec, const DataSource& data, std::size_t batches,
                 std::size_t batch_size);

struct TrainResult {
  GWRatePoint point;  // bits per sample, on validation data
  Metrics best;
  std::size_t steps_run = 0;
  std::size_t best_step = 0;
  bool early_stopped = false;
  std::vector<double> val_history;  // validation loss at each check
};

using ProgressFn = std::function<void(std::size_t step, const Metrics& val)>;

// Trains in place and leaves the codec holding the best validation parameters.
// A non-finite loss or gradient raises NumericalError with the step's terms.
TrainResult train(GwnCodec& codec, const DataSource& data, const TrainOptions& opts,
                  const ProgressFn& progress = {});

}  // namespace gwn
