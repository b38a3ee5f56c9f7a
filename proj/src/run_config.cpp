#include "gwn/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>

#include "json.hpp"

namespace gwn {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) {
      throw ValidationError("config: unknown key '" + (where.empty() ? key : where + "." + key) +
                            "'");
    }
  }
}

template <typename T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t> ||
                  std::is_same_v<T, int>) {
      if (!obj[key].is_number_integer()) throw std::invalid_argument("not an integer");
      if constexpr (!std::is_same_v<T, int>) {
        if (obj[key].get<long long>() < 0) throw std::invalid_argument("negative");
      }
    }
    out = obj[key].get<T>();
  } catch (const std::exception& e) {
    throw ValidationError("config: bad value for '" + where + "." + key + "': " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, "", {"seed", "training", "codec", "source", "theory"});
  read(j, "", "seed", c.seed);
  if (j.contains("training")) {
    const json& t = j["training"];
    reject_unknown(t, "training",
                   {"batch_size", "learning_rate", "adam_beta1", "adam_beta2", "grad_clip",
                    "patience", "max_steps", "val_every", "val_batches", "val_batch_size"});
    read(t, "training", "batch_size", c.training.batch_size);
    read(t, "training", "learning_rate", c.training.learning_rate);
    read(t, "training", "adam_beta1", c.training.adam_beta1);
    read(t, "training", "adam_beta2", c.training.adam_beta2);
    read(t, "training", "grad_clip", c.training.grad_clip);
    read(t, "training", "patience", c.training.patience);
    read(t, "training", "max_steps", c.training.max_steps);
    read(t, "training", "val_every", c.training.val_every);
    read(t, "training", "val_batches", c.training.val_batches);
    read(t, "training", "val_batch_size", c.training.val_batch_size);
  }
  if (j.contains("codec")) {
    const json& t = j["codec"];
    reject_unknown(t, "codec",
                   {"arch", "latent_dim", "hidden", "beta", "eta", "gamma", "lambda1", "lambda2"});
    read(t, "codec", "arch", c.codec.arch);
    read(t, "codec", "latent_dim", c.codec.latent_dim);
    read(t, "codec", "hidden", c.codec.hidden);
    read(t, "codec", "beta", c.codec.beta);
    read(t, "codec", "eta", c.codec.eta);
    read(t, "codec", "gamma", c.codec.gamma);
    read(t, "codec", "lambda1", c.codec.lambda1);
    read(t, "codec", "lambda2", c.codec.lambda2);
  }
  if (j.contains("source")) {
    const json& t = j["source"];
    reject_unknown(t, "source",
                   {"kind", "height", "width", "copy_prob", "variance", "block", "attribute",
                    "embedding_dim", "noise_scale"});
    read(t, "source", "kind", c.source.kind);
    read(t, "source", "height", c.source.height);
    read(t, "source", "width", c.source.width);
    read(t, "source", "copy_prob", c.source.copy_prob);
    read(t, "source", "variance", c.source.variance);
    read(t, "source", "block", c.source.block);
    read(t, "source", "attribute", c.source.attribute);
    read(t, "source", "embedding_dim", c.source.embedding_dim);
    read(t, "source", "noise_scale", c.source.noise_scale);
  }
  if (j.contains("theory")) {
    const json& t = j["theory"];
    reject_unknown(t, "theory", {"ba_tol", "ba_max_iters", "grid", "rate_tol"});
    read(t, "theory", "ba_tol", c.theory.ba_tol);
    read(t, "theory", "ba_max_iters", c.theory.ba_max_iters);
    read(t, "theory", "grid", c.theory.grid);
    read(t, "theory", "rate_tol", c.theory.rate_tol);
  }
  resolve(c);
  return c;
}

void resolve(RunConfig& c) {
  if (!(c.codec.eta > 0.0)) throw ValidationError("config: codec.eta must be > 0");
  if (c.codec.lambda1 <= 0.0) c.codec.lambda1 = 1.0 / c.codec.eta;
  if (c.codec.lambda2 <= 0.0) c.codec.lambda2 = 1.0 / c.codec.eta;
  arch_from_string(c.codec.arch);
  source_kind_from_string(c.source.kind);
  attribute_kind_from_string(c.source.attribute);
  validate(codec_config(c));
  if (c.training.batch_size == 0 || c.training.max_steps == 0 || c.training.val_every == 0 ||
      c.training.val_batches == 0 || c.training.val_batch_size == 0) {
    throw ValidationError("config: training sizes must be >= 1");
  }
  if (!(c.training.learning_rate > 0.0)) {
    throw ValidationError("config: training.learning_rate must be > 0");
  }
  if (!(c.theory.ba_tol > 0.0) || c.theory.ba_max_iters <= 0 || c.theory.grid < 2) {
    throw ValidationError("config: theory settings out of range");
  }
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  const auto& t = c.training;
  j["training"] = {{"batch_size", t.batch_size},   {"learning_rate", t.learning_rate},
                   {"adam_beta1", t.adam_beta1},   {"adam_beta2", t.adam_beta2},
                   {"grad_clip", t.grad_clip},     {"patience", t.patience},
                   {"max_steps", t.max_steps},     {"val_every", t.val_every},
                   {"val_batches", t.val_batches}, {"val_batch_size", t.val_batch_size}};
  const auto& k = c.codec;
  j["codec"] = {{"arch", k.arch}, {"latent_dim", k.latent_dim}, {"hidden", k.hidden},
                {"beta", k.beta}, {"eta", k.eta},               {"gamma", k.gamma},
                {"lambda1", k.lambda1}, {"lambda2", k.lambda2}};
  const auto& s = c.source;
  j["source"] = {{"kind", s.kind},
                 {"height", s.height},
                 {"width", s.width},
                 {"copy_prob", s.copy_prob},
                 {"variance", s.variance},
                 {"block", s.block},
                 {"attribute", s.attribute},
                 {"embedding_dim", s.embedding_dim},
                 {"noise_scale", s.noise_scale}};
  const auto& th = c.theory;
  j["theory"] = {{"ba_tol", th.ba_tol},
                 {"ba_max_iters", th.ba_max_iters},
                 {"grid", th.grid},
                 {"rate_tol", th.rate_tol}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg))));
  return buf;
}

bool apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("GWN_SEED");
  if (!env || !*env) return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') {
    throw ValidationError(std::string("GWN_SEED must be a non-negative integer, got '") + env +
                          "'");
  }
  cfg.seed = v;
  return true;
}

CodecConfig codec_config(const RunConfig& c) {
  CodecConfig k;
  k.arch = arch_from_string(c.codec.arch);
  k.latent_dim = c.codec.latent_dim;
  k.hidden = c.codec.hidden;
  k.beta = c.codec.beta;
  k.eta = c.codec.eta;
  k.gamma = c.codec.gamma;
  k.lambda1 = c.codec.lambda1 > 0.0 ? c.codec.lambda1 : 1.0 / c.codec.eta;
  k.lambda2 = c.codec.lambda2 > 0.0 ? c.codec.lambda2 : 1.0 / c.codec.eta;
  k.seed = c.seed;
  return k;
}

DataSpec data_spec(const RunConfig& c) {
  DataSpec d;
  d.kind = source_kind_from_string(c.source.kind);
  d.synthetic.height = c.source.height;
  d.synthetic.width = c.source.width;
  d.synthetic.copy_prob = c.source.copy_prob;
  d.synthetic.variance = c.source.variance;
  d.synthetic.block = c.source.block;
  d.synthetic.seed = c.seed;
  d.attribute.kind = attribute_kind_from_string(c.source.attribute);
  d.attribute.embedding_dim = c.source.embedding_dim;
  d.attribute.noise_scale = c.source.noise_scale;
  d.attribute.seed = c.seed;
  return d;
}

TrainOptions train_options(const RunConfig& c) {
  TrainOptions o;
  o.steps = c.training.max_steps;
  o.batch_size = c.training.batch_size;
  o.val_every = c.training.val_every;
  o.val_batches = c.training.val_batches;
  o.val_batch_size = c.training.val_batch_size;
  o.patience = c.training.patience;
  o.adam.lr = c.training.learning_rate;
  o.adam.beta1 = c.training.adam_beta1;
  o.adam.beta2 = c.training.adam_beta2;
  o.adam.clip_norm = c.training.grad_clip;
  return o;
}

}  // namespace gwn
