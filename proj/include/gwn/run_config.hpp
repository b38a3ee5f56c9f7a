// Run configuration: a JSON document with fixed sections. Unknown keys are
// rejected; the resolved document (defaults filled in) is hashed to name run
// directories.
#pragma once

#include <cstdint>
#include <string>

#include "gwn/codec.hpp"
#include "gwn/common_info.hpp"
#include "gwn/train.hpp"

namespace gwn {

struct TrainingSection {
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double grad_clip = 1.0;
  std::size_t patience = 10;
  std::size_t max_steps = 3000;
  std::size_t val_every = 100;
  std::size_t val_batches = 4;
  std::size_t val_batch_size = 250;
};

struct CodecSection {
  std::string arch = "shared";
  std::size_t latent_dim = 8;
  std::size_t hidden = 0;
  double beta = 1.0;
  double eta = 0.1;
  double gamma = 1.0;
  double lambda1 = 0.0;  // 0 => 1/eta
  double lambda2 = 0.0;
};

struct SourceSection {
  std::string kind = "synthetic";
  std::size_t height = 4;
  std::size_t width = 4;
  double copy_prob = 0.8;
  double variance = 4.0;
  std::size_t block = 0;
  std::string attribute = "dependent";
  std::size_t embedding_dim = 20;
  double noise_scale = 0.1;
};

struct TheorySection {
  double ba_tol = 1e-9;
  int ba_max_iters = 50'000;
  std::size_t grid = 8;
  double rate_tol = 0.05;
};

struct RunConfig {
  std::uint64_t seed = 1;
  TrainingSection training;
  CodecSection codec;
  SourceSection source;
  TheorySection theory;
};

// Parses and validates; throws ValidationError naming the offending key.
RunConfig parse_run_config(const std::string& json_text);
// Fills derived defaults (lambdas) and checks ranges.
void resolve(RunConfig& cfg);
// Resolved config as pretty JSON, keys in a fixed order.
std::string to_json(const RunConfig& cfg);
// 16 hex digits of the 64-bit FNV-1a hash of to_json(cfg).
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);

// Replaces cfg.seed with $GWN_SEED when set; returns true if it did.
bool apply_env_seed(RunConfig& cfg);

CodecConfig codec_config(const RunConfig& cfg);
DataSpec data_spec(const RunConfig& cfg);
TrainOptions train_options(const RunConfig& cfg);

}  // namespace gwn
