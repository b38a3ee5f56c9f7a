// gwn: command-line front end. Every subcommand writes into
// <out-dir>/<subcommand>-<hash>, where the hash covers the resolved config and
// the subcommand's own arguments.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gwn/channel_coding.hpp"
#include "gwn/checkpoint.hpp"
#include "gwn/common_info.hpp"
#include "gwn/evaluation.hpp"
#include "gwn/rate_distortion.hpp"
#include "gwn/run_config.hpp"
#include "gwn/source_gen.hpp"
#include "gwn/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace gwn;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& t : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": '" + t + "' is not a number");
    }
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

// Appends config_hash and seed columns to every record of an RFC 4180 table
// whose records end in CRLF and hold no embedded line breaks.
std::string tag_csv(const std::string& csv, const std::string& hash, std::uint64_t seed) {
  std::string out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string::npos) end = csv.size();
    std::string line = csv.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    if (line.empty()) continue;
    out += line + (header ? ",config_hash,run_seed" : "," + hash + "," + std::to_string(seed));
    out += "\r\n";
    header = false;
  }
  return out;
}

std::string lf_to_crlf(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n' && (i == 0 || s[i - 1] != '\r')) out += '\r';
    out += s[i];
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Run {
  RunConfig cfg;
  std::string hash;
  fs::path dir;

  ordered_json stamp(ordered_json j) const {
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    return j;
  }
  void write_json(const std::string& name, const ordered_json& j) const {
    write_text(dir / name, stamp(j).dump(2) + "\n");
  }
  void write_csv(const std::string& name, const std::string& csv) const {
    write_text(dir / name, tag_csv(csv, hash, cfg.seed));
  }
};

struct Common {
  std::string config_path;
  std::string out_dir = "runs";
  std::int64_t seed = -1;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : parse_run_config(read_text(c.config_path));
  apply_env_seed(cfg);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  resolve(cfg);
  return cfg;
}

Run open_run(const std::string& command, const RunConfig& cfg, const Common& common,
             const ordered_json& args) {
  Run r;
  r.cfg = cfg;
  ordered_json snapshot;
  snapshot["command"] = command;
  snapshot["args"] = args;
  snapshot["config"] = ordered_json::parse(to_json(cfg));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(snapshot.dump())));
  r.hash = buf;
  r.dir = fs::path(common.out_dir) / (command + "-" + r.hash);
  fs::create_directories(r.dir);
  r.write_json("config.json", snapshot);
  return r;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration");
  sub->add_option("--out-dir", c.out_dir, "root directory for run outputs");
  sub->add_option("--seed", c.seed, "master seed (overrides config and GWN_SEED)");
}

ordered_json rd_curve_json(const RDCurve& c) {
  ordered_json pts = ordered_json::array();
  for (const RDPoint& p : c.points)
    pts.push_back({{"slope", p.lagrange_s}, {"rate", p.rate}, {"distortion", p.distortion}});
  return pts;
}

// Per-position (X1, X2) joint of the synthetic source: copies with the map's
// copy fraction, independent pairs otherwise.
JointPmf synthetic_pair_joint(const SyntheticSource& src) {
  const Pmf& base = src.base_pmf();
  const double c = src.dependency_map().copy_fraction();
  const std::size_t k = base.size();
  std::vector<double> p(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      p[a * k + b] = (1.0 - c) * base[a] * base[b] + (a == b ? c * base[a] : 0.0);
  return JointPmf::from_weights({k, k}, p);
}

std::vector<double> symbol_values() {
  std::vector<double> v;
  for (int s = kSymbolMin; s <= kSymbolMax; ++s) v.push_back(s);
  return v;
}

JointPmf dsbs(double a0) {
  return JointPmf({2, 2}, {(1 - a0) / 2, a0 / 2, a0 / 2, (1 - a0) / 2});
}

JointPmf copy_joint(std::size_t n) {
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 1.0 / n;
  return JointPmf({n, n}, p);
}

JointPmf independent_joint(std::size_t n) {
  return JointPmf::product(Pmf::uniform(n), Pmf::uniform(n));
}

JointPmf random_joint(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  return JointPmf::from_weights({n, n}, rng.dirichlet(n * n, 1.0));
}

// ---------------------------------------------------------------- gen-source

int cmd_gen_source(const Common& common, const std::string& kind_flag, std::size_t n,
                   std::uint64_t batch_index) {
  RunConfig cfg = load_config(common);
  if (!kind_flag.empty()) cfg.source.kind = kind_flag;
  resolve(cfg);
  const Run run = open_run("gen-source", cfg, common,
                           {{"kind", cfg.source.kind}, {"n", n}, {"batch_index", batch_index}});
  const DataSpec spec = data_spec(cfg);
  ordered_json info;
  std::string csv;
  if (spec.kind == SourceKind::kSynthetic) {
    const SyntheticSource src(spec.synthetic);
    const SyntheticBatch b = src.sample_batch(n, batch_index);
    const std::size_t d = b.height * b.width;
    csv = "sample";
    for (const char* name : {"x1", "x2", "z1", "z2"})
      for (std::size_t i = 0; i < d; ++i) csv += std::string(",") + name + "_" + std::to_string(i);
    csv += "\r\n";
    for (std::size_t s = 0; s < n; ++s) {
      csv += std::to_string(s);
      for (const auto* v : {&b.x1, &b.x2, &b.z1, &b.z2})
        for (std::size_t i = 0; i < d; ++i) csv += "," + num((*v)[s * d + i]);
      csv += "\r\n";
    }
    const SourceMeasures m = src.theoretical_measures();
    std::vector<double> base(src.base_pmf().probs().begin(), src.base_pmf().probs().end());
    std::vector<int> flags;
    for (bool f : src.dependency_map().flags()) flags.push_back(f ? 1 : 0);
    info["kind"] = "synthetic";
    info["base_pmf"] = base;
    info["base_entropy_bits"] = entropy(src.base_pmf());
    info["copy_fraction"] = src.dependency_map().copy_fraction();
    info["copy_map"] = flags;
    info["h_joint_bits_per_element"] = m.h_joint;
    info["h_sum_bits_per_element"] = m.h_sum;
    info["mi_bits_per_element"] = m.mi;
  } else {
    const AttributeSource src(spec.attribute);
    const AttributeBatch b = src.sample_batch(n, batch_index);
    csv = "sample,digit,color";
    for (std::size_t i = 0; i < b.dim; ++i) csv += ",v" + std::to_string(i);
    csv += "\r\n";
    for (std::size_t s = 0; s < n; ++s) {
      csv += std::to_string(s) + "," + std::to_string(b.digit[s]) + "," +
             std::to_string(b.color[s]);
      for (std::size_t i = 0; i < b.dim; ++i) csv += "," + num(b.input[s * b.dim + i]);
      csv += "\r\n";
    }
    info["kind"] = "attribute";
    info["attribute"] = to_string(spec.attribute.kind);
    info["joint_entropy_bits"] = entropy(src.joint());
    info["mi_bits"] = mutual_information(src.joint(), {0}, {1});
    info["joint"] = std::vector<double>(src.joint().probs().begin(), src.joint().probs().end());
  }
  run.write_csv("samples.csv", csv);
  run.write_json("source.json", info);
  std::cout << run.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- ba-curves

int cmd_ba_curves(const Common& common, const std::string& source, std::string distortion,
                  std::size_t points) {
  const RunConfig cfg = load_config(common);
  if (source != "binary" && source != "synthetic") {
    throw ValidationError("ba-curves: --source must be binary or synthetic");
  }
  if (distortion.empty()) distortion = source == "binary" ? "hamming" : "squared";
  if (distortion != "hamming" && distortion != "squared") {
    throw ValidationError("ba-curves: --distortion must be hamming or squared");
  }
  if (points < 2) throw ValidationError("ba-curves: --points must be >= 2");
  const Run run = open_run("ba-curves", cfg, common,
                           {{"source", source}, {"distortion", distortion}, {"points", points}});
  BAOptions ba;
  ba.tol = cfg.theory.ba_tol;
  ba.max_iters = cfg.theory.ba_max_iters;

  std::vector<double> slopes;
  for (std::size_t i = 0; i < points; ++i)
    slopes.push_back(-0.02 * std::pow(1000.0, static_cast<double>(i) / (points - 1)));

  ordered_json out;
  if (source == "binary") {
    const Pmf p = Pmf::uniform(2);
    const DistortionMatrix d = distortion == "hamming"
                                   ? DistortionMatrix::hamming(2)
                                   : DistortionMatrix::squared_error({0, 1}, {0, 1});
    const RDCurve c = sweep_curve([&](double s) { return ba_marginal(p, d, s, ba); }, slopes);
    run.write_csv("marginal.csv", lf_to_crlf(to_csv(c)));
    out["marginal"] = rd_curve_json(c);
  } else {
    SyntheticSourceSpec sspec;
    sspec.seed = cfg.seed;
    sspec.height = cfg.source.height;
    sspec.width = cfg.source.width;
    sspec.copy_prob = cfg.source.copy_prob;
    sspec.variance = cfg.source.variance;
    const SyntheticSource src(sspec);
    const auto values = symbol_values();
    const DistortionMatrix d = distortion == "hamming"
                                   ? DistortionMatrix::hamming(values.size())
                                   : DistortionMatrix::squared_error(values, values);
    const RDCurve marg =
        sweep_curve([&](double s) { return ba_marginal(src.base_pmf(), d, s, ba); }, slopes);
    const JointPmf pair = synthetic_pair_joint(src);
    const RDCurve joint = sweep_curve(
        [&](double s) {
          const JointRDPoint j = ba_joint(pair, d, d, s, s, ba);
          RDPoint p;
          p.rate = j.rate;
          p.distortion = 0.5 * (j.distortion1 + j.distortion2);
          p.lagrange_s = s;
          p.converged = j.converged;
          p.iterations = j.iterations;
          return p;
        },
        slopes);
    run.write_csv("marginal.csv", lf_to_crlf(to_csv(marg)));
    run.write_csv("joint.csv", lf_to_crlf(to_csv(joint)));
    out["marginal"] = rd_curve_json(marg);
    out["joint"] = rd_curve_json(joint);
    out["copy_fraction"] = src.dependency_map().copy_fraction();
  }
  out["units"] = "bits per element";
  run.write_json("curves.json", out);
  std::cout << run.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- common-info

JointPmf preset_joint(const std::string& preset, double a0, std::size_t n, std::uint64_t seed) {
  if (preset == "dsbs") return dsbs(a0);
  if (preset == "copy") return copy_joint(n);
  if (preset == "independent") return independent_joint(n);
  if (preset == "random") return random_joint(seed, n);
  throw ValidationError("unknown preset '" + preset + "'");
}

ordered_json ci_json(const CommonInfoResult& r) {
  return {{"value_bits", r.value_bits},
          {"method", to_string(r.method)},
          {"aux_alphabet_size", r.aux_alphabet_size},
          {"residual_bits", r.residual_bits},
          {"feasible", r.feasible}};
}

int cmd_common_info(const Common& common, const std::string& preset, double a0, std::size_t n,
                    const std::string& joint_file) {
  const RunConfig cfg = load_config(common);
  const Run run = open_run("common-info", cfg, common,
                           {{"preset", preset}, {"a0", a0}, {"n", n}, {"joint", joint_file}});
  const JointPmf j = joint_file.empty() ? preset_joint(preset, a0, n, cfg.seed)
                                        : joint_from_text(read_text(joint_file));
  if (j.rank() != 2) throw ValidationError("common-info: joint must have two axes");
  WynerOptions wo;
  wo.seed = cfg.seed;
  ordered_json out;
  out["joint"] = std::vector<double>(j.probs().begin(), j.probs().end());
  out["mutual_information_bits"] = mutual_information(j, {0}, {1});
  out["gacs_korner"] = ci_json(gk_common_information_lossless(j));
  out["wyner"] = ci_json(wyner_common_information_lossless(j, wo));
  if (joint_file.empty() && preset == "dsbs") {
    const double a1 = (1.0 - std::sqrt(1.0 - 2.0 * a0)) / 2.0;
    out["wyner_closed_form_bits"] = 1.0 + binary_entropy(a0) - 2.0 * binary_entropy(a1);
  }
  run.write_json("common_info.json", out);
  std::cout << "gacs_korner=" << out["gacs_korner"]["value_bits"].get<double>()
            << " wyner=" << out["wyner"]["value_bits"].get<double>() << "\n";
  return 0;
}

// ---------------------------------------------------------------- check-bounds

int cmd_check_bounds(const Common& common, const std::string& preset, double d1_target,
                     double d2_target, double slope) {
  const RunConfig cfg = load_config(common);
  const Run run = open_run("check-bounds", cfg, common,
                           {{"preset", preset}, {"d1", d1_target}, {"d2", d2_target},
                            {"slope", slope}});
  JointPmf j = independent_joint(2);
  std::size_t n = 2;
  if (preset == "independent-bits") {
    j = independent_joint(2);
  } else if (preset == "copy3") {
    j = copy_joint(3);
    n = 3;
  } else if (preset == "dsbs") {
    j = dsbs(0.1);
  } else if (preset == "random") {
    j = random_joint(cfg.seed, 3);
    n = 3;
  } else {
    throw ValidationError("check-bounds: unknown preset '" + preset + "'");
  }
  const DistortionMatrix d = DistortionMatrix::hamming(n);
  double D1 = d1_target, D2 = d2_target;
  if (D1 < 0.0 || D2 < 0.0) {
    // Targets taken from the joint Blahut-Arimoto solution at `slope`.
    const JointRDPoint p = ba_joint(j, d, d, slope, slope);
    if (D1 < 0.0) D1 = p.distortion1;
    if (D2 < 0.0) D2 = p.distortion2;
  }
  BoundCheckOptions opts;
  opts.enumeration.grid = cfg.theory.grid;
  opts.enumeration.rate_tol = cfg.theory.rate_tol;
  opts.wyner.seed = cfg.seed;
  const BoundCheckReport rep = check_theorem1(j, d, d, D1, D2, opts);
  ordered_json out = ordered_json::parse(to_json(rep));
  out["preset"] = preset;
  out["D1"] = D1;
  out["D2"] = D2;
  run.write_json("bounds.json", out);
  std::cout << "ordering_satisfied=" << (rep.ordering_satisfied ? "true" : "false")
            << " gk=" << rep.gk_value << " max_receive_ii=" << rep.max_receive_ii
            << " min_transmit_ii=" << rep.min_transmit_ii << " wyner=" << rep.wyner_value
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- gw-discrete

int cmd_gw_discrete(const Common& common, const std::string& preset, std::size_t n, double D1,
                    double D2, double alpha1, double alpha2, std::vector<std::size_t> sizes) {
  const RunConfig cfg = load_config(common);
  const Run run = open_run("gw-discrete", cfg, common,
                           {{"preset", preset}, {"n", n}, {"d1", D1}, {"d2", D2},
                            {"alpha1", alpha1}, {"alpha2", alpha2}, {"sizes", sizes}});
  const JointPmf j = preset_joint(preset, 0.1, n, cfg.seed);
  const std::size_t k1 = j.axis_size(0), k2 = j.axis_size(1);
  if (sizes.empty()) sizes = {k1 * k2, k1, k2};
  if (sizes.size() != 3) throw ValidationError("gw-discrete: --sizes takes three values");
  GWDiscreteOptions opts;
  opts.seed = cfg.seed;
  const GWDiscreteResult r =
      gw_objective_discrete(j, DistortionMatrix::hamming(k1), DistortionMatrix::hamming(k2), D1,
                            D2, alpha1, alpha2, {sizes[0], sizes[1], sizes[2]}, opts);
  ordered_json out;
  out["T_bits"] = r.T_value;
  out["h_y0"] = r.h_y0;
  out["h_y1_given_y0"] = r.h_y1_given_y0;
  out["h_y2_given_y0"] = r.h_y2_given_y0;
  out["distortion1"] = r.distortion1;
  out["distortion2"] = r.distortion2;
  out["f0"] = r.f0;
  out["f1"] = r.f1;
  out["f2"] = r.f2;
  out["g1"] = r.g1;
  out["g2"] = r.g2;
  out["exhaustive"] = r.exhaustive;
  out["evaluated"] = r.evaluated;
  run.write_json("gw_discrete.json", out);
  std::cout << "T=" << r.T_value << "\n";
  return 0;
}

// ---------------------------------------------------------------- train / sweep

struct TrainArgs {
  std::string arch, source, attribute;
  std::optional<double> beta, eta;
  std::optional<std::int64_t> steps;
  std::string out;
};

void apply_train_args(RunConfig& cfg, const TrainArgs& a) {
  if (!a.arch.empty()) cfg.codec.arch = a.arch;
  if (!a.source.empty()) cfg.source.kind = a.source;
  if (!a.attribute.empty()) cfg.source.attribute = a.attribute;
  if (a.beta) cfg.codec.beta = *a.beta;
  if (a.eta) {
    cfg.codec.eta = *a.eta;
    cfg.codec.lambda1 = cfg.codec.lambda2 = 0.0;
  }
  if (a.steps) {
    if (*a.steps <= 0) throw ValidationError("--steps must be positive");
    cfg.training.max_steps = static_cast<std::size_t>(*a.steps);
  }
  resolve(cfg);
}

struct TrainedRun {
  GWRatePoint point;
  GWRatePoint point_bpp;
  TrainResult result;
};

TrainedRun train_one(const RunConfig& cfg, const fs::path& ckpt_dir, const std::string& hash) {
  const DataSource data(data_spec(cfg));
  GwnCodec codec(codec_config(cfg), data.shape());
  TrainedRun t;
  t.result = train(codec, data, train_options(cfg));
  t.point = t.result.point;
  t.point_bpp = to_bpp(t.point, data.pixels());
  if (!ckpt_dir.empty()) {
    ordered_json meta;
    meta["config"] = ordered_json::parse(to_json(cfg));
    meta["config_hash"] = hash;
    meta["seed"] = cfg.seed;
    save_checkpoint(codec.params(), (ckpt_dir / "params.bin").string(),
                    (ckpt_dir / "manifest.json").string(), meta.dump());
  }
  return t;
}

ordered_json point_json(const GWRatePoint& p) { return ordered_json::parse(to_json(p)); }

int cmd_train(const Common& common, const TrainArgs& a) {
  RunConfig cfg = load_config(common);
  apply_train_args(cfg, a);
  const Run run = open_run("train", cfg, common, ordered_json::object());
  const TrainedRun t = train_one(cfg, run.dir, run.hash);
  ordered_json out = point_json(t.point);
  out["bpp"] = point_json(t.point_bpp);
  out["steps_run"] = t.result.steps_run;
  out["best_step"] = t.result.best_step;
  out["early_stopped"] = t.result.early_stopped;
  run.write_json("point.json", out);
  if (!a.out.empty()) write_text(a.out, run.stamp(out).dump(2) + "\n");
  std::cout << run.dir.string() << "\n";
  return 0;
}

int cmd_sweep(const Common& common, const std::string& archs, const std::string& betas,
              const std::string& etas, const std::string& seeds, int jobs, std::int64_t steps,
              const std::string& source, const std::string& out_csv) {
  if (jobs < 1) throw ValidationError("sweep: --jobs must be >= 1");
  RunConfig base = load_config(common);
  if (!source.empty()) base.source.kind = source;
  if (steps > 0) base.training.max_steps = static_cast<std::size_t>(steps);
  resolve(base);
  const auto arch_list = split_list(archs);
  const auto beta_list = parse_doubles(betas, "--beta");
  const auto eta_list = parse_doubles(etas, "--eta");
  std::vector<std::uint64_t> seed_list;
  if (seeds.empty()) {
    seed_list.push_back(base.seed);
  } else {
    for (double s : parse_doubles(seeds, "--seeds")) seed_list.push_back(static_cast<std::uint64_t>(s));
  }
  for (const auto& a : arch_list) arch_from_string(a);
  // --jobs is recorded but does not enter the hash: results do not depend on it.
  const Run run = open_run("sweep", base, common,
                           {{"arch", arch_list}, {"beta", beta_list}, {"eta", eta_list},
                            {"seeds", seed_list}});
  std::vector<GWRatePoint> bits, bpp;
  std::map<std::string, std::map<std::string, std::vector<GWRatePoint>>> by_beta;
  for (const auto& arch : arch_list)
    for (double beta : beta_list)
      for (double eta : eta_list)
        for (std::uint64_t seed : seed_list) {
          RunConfig cfg = base;
          cfg.seed = seed;
          cfg.codec.arch = arch;
          cfg.codec.beta = beta;
          cfg.codec.eta = eta;
          cfg.codec.lambda1 = cfg.codec.lambda2 = 0.0;
          resolve(cfg);
          const TrainedRun t = train_one(cfg, {}, run.hash);
          bits.push_back(t.point);
          bpp.push_back(t.point_bpp);
          by_beta[num(beta)][arch].push_back(t.point_bpp);
          std::cerr << "sweep: " << arch << " beta=" << beta << " eta=" << eta
                    << " seed=" << seed << " Rt=" << t.point.Rt << "\n";
        }
  for (const auto& p : bits) audit_rate_point(p);
  run.write_csv("points.csv", rate_points_csv(bits));
  run.write_csv("points_bpp.csv", rate_points_csv(bpp));
  ordered_json summary;
  summary["rows"] = bits.size();
  summary["jobs"] = jobs;
  ordered_json bd;
  for (const auto& [beta, archs_pts] : by_beta) {
    ordered_json m;
    for (const auto& [key, v] : bd_rate_matrix(archs_pts)) m[key] = v;
    bd[beta] = m;
  }
  summary["bd_rate_percent_by_beta"] = bd;
  run.write_json("summary.json", summary);
  if (!out_csv.empty()) write_text(out_csv, tag_csv(rate_points_csv(bits), run.hash, base.seed));
  std::cout << run.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- encode / decode

struct LoadedCodec {
  RunConfig cfg;
  std::unique_ptr<DataSource> data;
  std::unique_ptr<GwnCodec> codec;
};

LoadedCodec load_codec(const fs::path& dir) {
  const auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
  if (!manifest.contains("meta") || !manifest["meta"].contains("config")) {
    throw ValidationError("checkpoint " + dir.string() + " has no embedded config");
  }
  LoadedCodec l;
  l.cfg = parse_run_config(manifest["meta"]["config"].dump());
  l.data = std::make_unique<DataSource>(data_spec(l.cfg));
  l.codec = std::make_unique<GwnCodec>(codec_config(l.cfg), l.data->shape());
  load_checkpoint(l.codec->params(), (dir / "params.bin").string(),
                  (dir / "manifest.json").string());
  return l;
}

int cmd_encode(const Common& common, const std::string& ckpt, std::size_t n,
               std::uint64_t batch_index, const std::string& out_file) {
  LoadedCodec l = load_codec(ckpt);
  const Run run = open_run("encode", l.cfg, common,
                           {{"checkpoint", fs::absolute(ckpt).lexically_normal().string()},
                            {"n", n}, {"batch_index", batch_index}});
  const Batch b = l.data->batch(n, kValidationBatchBase + batch_index);
  const ChannelCodes codes = l.codec->encode(b);
  ContainerStats st;
  const auto bytes = encode_container(*l.codec, codes, &st);
  write_text(run.dir / "codes.gwn",
             std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  if (!out_file.empty()) {
    write_text(out_file, std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  Tape tape;
  const ForwardPass f = l.codec->forward(tape, b);
  const double est[3] = {f.r0.value().item() * n, f.r1.value().item() * n,
                         f.r2.value().item() * n};
  ordered_json out;
  out["samples"] = n;
  out["estimated_bits"] = {est[0], est[1], est[2]};
  out["payload_bits"] = {st.payload_bits[0], st.payload_bits[1], st.payload_bits[2]};
  out["header_bits"] = st.header_bits;
  out["container_bits"] = st.total_bits();
  run.write_json("encode.json", out);
  std::cout << "container_bits=" << st.total_bits()
            << " estimated_bits=" << est[0] + est[1] + est[2] << "\n";
  return 0;
}

int cmd_decode(const Common& common, const std::string& ckpt, const std::string& in_file,
               std::int64_t verify_index) {
  LoadedCodec l = load_codec(ckpt);
  const std::string raw = read_text(in_file);
  const std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
  const Run run = open_run("decode", l.cfg, common,
                           {{"checkpoint", fs::absolute(ckpt).lexically_normal().string()},
                            {"input_fnv1a", fnv1a64(raw)}, {"verify_index", verify_index}});
  const ChannelCodes codes = decode_container(*l.codec, bytes);
  std::size_t n = 0;
  for (const Tensor* t : {&codes.y0, &codes.y1, &codes.y2})
    if (t->size() > 0) n = t->rows();
  std::string csv = "sample";
  const char* names[3] = {"y0", "y1", "y2"};
  const Tensor* chans[3] = {&codes.y0, &codes.y1, &codes.y2};
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < l.codec->channel_width(c); ++i)
      csv += std::string(",") + names[c] + "_" + std::to_string(i);
  csv += "\r\n";
  for (std::size_t r = 0; r < n; ++r) {
    csv += std::to_string(r);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < l.codec->channel_width(c); ++i)
        csv += "," + std::to_string(static_cast<long long>(chans[c]->at(r, i)));
    csv += "\r\n";
  }
  run.write_csv("decoded.csv", csv);
  ordered_json out;
  out["samples"] = n;
  if (verify_index >= 0) {
    const Batch b = l.data->batch(n, kValidationBatchBase + static_cast<std::uint64_t>(verify_index));
    const ChannelCodes ref = l.codec->encode(b);
    const bool same = ref.y0.data() == codes.y0.data() && ref.y1.data() == codes.y1.data() &&
                      ref.y2.data() == codes.y2.data();
    out["round_trip_exact"] = same;
    std::cout << "round_trip_exact=" << (same ? "true" : "false") << "\n";
  }
  run.write_json("decode.json", out);
  std::cout << run.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluation

int cmd_bdrate(const Common& common, const std::string& ref, const std::string& test,
               const std::string& kind) {
  const RunConfig cfg = load_config(common);
  const std::string ref_text = read_text(ref), test_text = read_text(test);
  const Run run = open_run("bdrate", cfg, common,
                           {{"reference_fnv1a", fnv1a64(ref_text)},
                            {"test_fnv1a", fnv1a64(test_text)}, {"rate", kind}});
  const RateKind k = rate_kind_from_string(kind);
  const double v = bd_rate(curve_from_points(parse_rate_points_csv(ref_text), k),
                           curve_from_points(parse_rate_points_csv(test_text), k));
  run.write_json("bdrate.json", {{"rate", kind}, {"bd_rate_percent", v}});
  std::cout << v << "\n";
  return 0;
}

int cmd_empirical_mi(const Common& common, const std::string& joint_csv,
                     const std::string& indep_csv) {
  const RunConfig cfg = load_config(common);
  const std::string jt = read_text(joint_csv), it = read_text(indep_csv);
  const Run run = open_run("empirical-mi", cfg, common,
                           {{"joint_fnv1a", fnv1a64(jt)}, {"independent_fnv1a", fnv1a64(it)}});
  const auto jp = parse_rate_points_csv(jt);
  const auto ip = parse_rate_points_csv(it);
  const OpCurve joint = curve_from_points(jp, RateKind::kTransmit);
  OpCurve m1, m2;
  for (const GWRatePoint& p : ip) {
    m1.distortion.push_back(p.D1);
    m1.rate.push_back(p.R1);
    m2.distortion.push_back(p.D2);
    m2.rate.push_back(p.R2);
  }
  const auto est = empirical_mi(joint, m1, m2);
  std::string csv = "distortion,mi,extrapolated\r\n";
  for (const MiEstimate& e : est)
    csv += num(e.distortion) + "," + num(e.mi) + "," + (e.extrapolated ? "1" : "0") + "\r\n";
  run.write_csv("mi.csv", csv);
  std::cout << run.dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gray-Wyner network toolkit"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-source", "sample a synthetic or attribute source");
  add_common(gen, common);
  std::string gen_kind;
  std::size_t gen_n = 1000;
  std::uint64_t gen_index = 0;
  gen->add_option("--kind", gen_kind, "synthetic or attribute");
  gen->add_option("--n", gen_n, "samples");
  gen->add_option("--batch-index", gen_index, "batch index");

  auto* ba = app.add_subcommand("ba-curves", "Blahut-Arimoto rate-distortion curves");
  add_common(ba, common);
  std::string ba_source = "synthetic", ba_dist;
  std::size_t ba_points = 25;
  ba->add_option("--source", ba_source, "binary or synthetic");
  ba->add_option("--distortion", ba_dist, "hamming or squared");
  ba->add_option("--points", ba_points, "slopes to evaluate");

  auto* ci = app.add_subcommand("common-info", "Gacs-Korner and Wyner common information");
  add_common(ci, common);
  std::string ci_preset = "dsbs", ci_joint;
  double ci_a0 = 0.1;
  std::size_t ci_n = 3;
  ci->add_option("--preset", ci_preset, "dsbs, copy, independent or random");
  ci->add_option("--a0", ci_a0, "crossover probability for dsbs");
  ci->add_option("--n", ci_n, "alphabet size for copy/independent/random");
  ci->add_option("--joint", ci_joint, "joint table file (overrides --preset)");

  auto* cb = app.add_subcommand("check-bounds", "interaction-information ordering check");
  add_common(cb, common);
  std::string cb_preset = "independent-bits";
  double cb_d1 = 0.0, cb_d2 = 0.0, cb_slope = -2.5;
  cb->add_option("--preset", cb_preset, "independent-bits, copy3, dsbs or random");
  cb->add_option("--d1", cb_d1, "distortion target 1 (negative: from joint BA at --slope)");
  cb->add_option("--d2", cb_d2, "distortion target 2");
  cb->add_option("--slope", cb_slope, "BA slope used for negative targets");

  auto* gw = app.add_subcommand("gw-discrete", "discrete transmit/receive objective");
  add_common(gw, common);
  std::string gw_preset = "copy";
  std::size_t gw_n = 3;
  double gw_d1 = 0.0, gw_d2 = 0.0, gw_a1 = 1.0, gw_a2 = 1.0;
  std::vector<std::size_t> gw_sizes;
  gw->add_option("--preset", gw_preset, "copy, independent, dsbs or random");
  gw->add_option("--n", gw_n, "alphabet size");
  gw->add_option("--d1", gw_d1, "distortion bound 1");
  gw->add_option("--d2", gw_d2, "distortion bound 2");
  gw->add_option("--alpha1", gw_a1, "weight on H(Y1|Y0)");
  gw->add_option("--alpha2", gw_a2, "weight on H(Y2|Y0)");
  gw->add_option("--sizes", gw_sizes, "alphabet sizes of Y0 Y1 Y2")->expected(3);

  auto* tr = app.add_subcommand("train", "train one codec and emit its rate point");
  add_common(tr, common);
  TrainArgs ta;
  tr->add_option("--arch", ta.arch, "shared, separated, combined, joint or independent");
  tr->add_option("--beta", ta.beta, "common-channel cost");
  tr->add_option("--eta", ta.eta, "objective scale (lambda = 1/eta)");
  tr->add_option("--steps", ta.steps, "maximum training steps");
  tr->add_option("--source", ta.source, "synthetic or attribute");
  tr->add_option("--attribute", ta.attribute, "dependent, independent or mixture");
  tr->add_option("--out", ta.out, "copy of the rate point JSON");

  auto* sw = app.add_subcommand("sweep", "train a grid of codecs");
  add_common(sw, common);
  std::string sw_arch = "shared", sw_beta = "1", sw_eta = "0.1", sw_seeds, sw_source, sw_out;
  int sw_jobs = 1;
  std::int64_t sw_steps = -1;
  sw->add_option("--arch", sw_arch, "comma-separated architectures");
  sw->add_option("--beta", sw_beta, "comma-separated beta values");
  sw->add_option("--eta", sw_eta, "comma-separated eta values");
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds");
  sw->add_option("--jobs", sw_jobs, "worker count");
  sw->add_option("--steps", sw_steps, "maximum training steps");
  sw->add_option("--source", sw_source, "synthetic or attribute");
  sw->add_option("--out", sw_out, "copy of the rate point CSV");

  auto* en = app.add_subcommand("encode", "range-code a validation batch");
  add_common(en, common);
  std::string en_ckpt, en_out;
  std::size_t en_n = 250;
  std::uint64_t en_index = 0;
  en->add_option("--checkpoint", en_ckpt, "train run directory")->required();
  en->add_option("--n", en_n, "samples");
  en->add_option("--batch-index", en_index, "validation batch index");
  en->add_option("--out", en_out, "copy of the container");

  auto* de = app.add_subcommand("decode", "decode a GWN1 container");
  add_common(de, common);
  std::string de_ckpt, de_in;
  std::int64_t de_verify = -1;
  de->add_option("--checkpoint", de_ckpt, "train run directory")->required();
  de->add_option("--in", de_in, "container file")->required();
  de->add_option("--verify-batch", de_verify, "compare against this validation batch");

  auto* bd = app.add_subcommand("bdrate", "BD-rate between two rate-point CSVs");
  add_common(bd, common);
  std::string bd_ref, bd_test, bd_rate_kind = "transmit";
  bd->add_option("--reference", bd_ref, "reference CSV")->required();
  bd->add_option("--test", bd_test, "test CSV")->required();
  bd->add_option("--rate", bd_rate_kind, "transmit or receive");

  auto* mi = app.add_subcommand("empirical-mi", "interpolated I(Z1;Z2) from codec curves");
  add_common(mi, common);
  std::string mi_joint, mi_indep;
  mi->add_option("--joint", mi_joint, "joint-architecture rate-point CSV")->required();
  mi->add_option("--independent", mi_indep, "independent-architecture rate-point CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*gen) return cmd_gen_source(common, gen_kind, gen_n, gen_index);
    if (*ba) return cmd_ba_curves(common, ba_source, ba_dist, ba_points);
    if (*ci) return cmd_common_info(common, ci_preset, ci_a0, ci_n, ci_joint);
    if (*cb) return cmd_check_bounds(common, cb_preset, cb_d1, cb_d2, cb_slope);
    if (*gw) return cmd_gw_discrete(common, gw_preset, gw_n, gw_d1, gw_d2, gw_a1, gw_a2, gw_sizes);
    if (*tr) return cmd_train(common, ta);
    if (*sw) {
      return cmd_sweep(common, sw_arch, sw_beta, sw_eta, sw_seeds, sw_jobs, sw_steps, sw_source,
                       sw_out);
    }
    if (*en) return cmd_encode(common, en_ckpt, en_n, en_index, en_out);
    if (*de) return cmd_decode(common, de_ckpt, de_in, de_verify);
    if (*bd) return cmd_bdrate(common, bd_ref, bd_test, bd_rate_kind);
    if (*mi) return cmd_empirical_mi(common, mi_joint, mi_indep);
  } catch (const ValidationError& e) {
    std::cerr << "gwn " << name << ": invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "gwn " << name << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "gwn " << name << ": error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
