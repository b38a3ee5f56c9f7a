#include "gwn/pmf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace gwn {
namespace {

double checked_mass(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError(std::string(what) +
                            ": probabilities must be finite and >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: total mass %.17g is not 1", what,
                  total);
    throw ValidationError(buf);
  }
  return total;
}

std::vector<double> normalised(std::vector<double> weights, const char* what) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError(std::string(what) + ": weights must be >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw ValidationError(std::string(what) + ": weights sum to zero");
  }
  for (double& w : weights) w /= total;
  return weights;
}

void check_axes(const JointPmf& j, const Axes& axes, bool allow_empty,
                const char* role) {
  if (!allow_empty && axes.empty()) {
    throw std::invalid_argument(std::string(role) + " axis set is empty");
  }
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (axes[k] >= j.rank()) {
      throw std::invalid_argument(std::string(role) + " axis " +
                                  std::to_string(axes[k]) + " out of range");
    }
    for (std::size_t m = k + 1; m < axes.size(); ++m) {
      if (axes[k] == axes[m]) {
        throw std::invalid_argument(std::string(role) +
                                    " axis set repeats an axis");
      }
    }
  }
}

void check_disjoint(std::initializer_list<const Axes*> sets) {
  std::vector<std::size_t> all;
  for (const Axes* s : sets) all.insert(all.end(), s->begin(), s->end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw std::invalid_argument("axis sets must be pairwise disjoint");
  }
}

Axes join(const Axes& a, const Axes& b) {
  Axes out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("Pmf: alphabet must be non-empty");
  checked_mass(probs_, "Pmf");
}

Pmf Pmf::from_weights(std::vector<double> weights) {
  if (weights.empty()) throw ValidationError("Pmf: alphabet must be non-empty");
  return Pmf(normalised(std::move(weights), "Pmf"));
}

Pmf Pmf::uniform(std::size_t n) {
  if (n == 0) throw ValidationError("Pmf: alphabet must be non-empty");
  return Pmf(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Pmf Pmf::point_mass(std::size_t n, std::size_t at) {
  if (at >= n) throw ValidationError("Pmf: point mass outside alphabet");
  std::vector<double> p(n, 0.0);
  p[at] = 1.0;
  return Pmf(std::move(p));
}

JointPmf::JointPmf(std::vector<std::size_t> axis_sizes, std::vector<double> probs)
    : sizes_(std::move(axis_sizes)), probs_(std::move(probs)) {
  if (sizes_.size() < kMinAxes || sizes_.size() > kMaxAxes) {
    throw ValidationError("JointPmf: rank must be between 2 and 5, got " +
                          std::to_string(sizes_.size()));
  }
  std::size_t cells = 1;
  for (std::size_t s : sizes_) {
    if (s == 0) throw ValidationError("JointPmf: axis sizes must be positive");
    if (cells > kMaxCells / s) {
      throw ValidationError("JointPmf: table exceeds 10^7 cells");
    }
    cells *= s;
  }
  if (cells != probs_.size()) {
    throw ValidationError("JointPmf: expected " + std::to_string(cells) +
                          " cells, got " + std::to_string(probs_.size()));
  }
  checked_mass(probs_, "JointPmf");
}

JointPmf JointPmf::from_weights(std::vector<std::size_t> axis_sizes,
                                std::vector<double> weights) {
  return JointPmf(std::move(axis_sizes),
                  normalised(std::move(weights), "JointPmf"));
}

JointPmf JointPmf::product(const Pmf& a, const Pmf& b) {
  std::vector<double> w(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) w[i * b.size() + k] = a[i] * b[k];
  return from_weights({a.size(), b.size()}, std::move(w));
}

std::size_t JointPmf::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != sizes_.size()) {
    throw std::invalid_argument("JointPmf: index rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t a = 0; a < sizes_.size(); ++a) {
    if (index[a] >= sizes_[a]) throw std::out_of_range("JointPmf: index");
    flat = flat * sizes_[a] + index[a];
  }
  return flat;
}

std::vector<std::size_t> JointPmf::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(sizes_.size());
  for (std::size_t a = sizes_.size(); a-- > 0;) {
    idx[a] = flat % sizes_[a];
    flat /= sizes_[a];
  }
  return idx;
}

double JointPmf::at(std::span<const std::size_t> index) const {
  return probs_[flat_index(index)];
}

std::vector<double> JointPmf::marginal_table(const Axes& keep) const {
  check_axes(*this, keep, true, "marginal");
  std::size_t out_cells = 1;
  for (std::size_t a : keep) out_cells *= sizes_[a];
  std::vector<double> out(out_cells, 0.0);

  // Stride of each source axis inside the output table (0 if summed out).
  std::vector<std::size_t> out_stride(sizes_.size(), 0);
  std::size_t stride = 1;
  for (std::size_t k = keep.size(); k-- > 0;) {
    out_stride[keep[k]] = stride;
    stride *= sizes_[keep[k]];
  }

  std::vector<std::size_t> idx(sizes_.size(), 0);
  std::size_t target = 0;
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    out[target] += probs_[flat];
    // Odometer increment, tracking the output offset incrementally.
    for (std::size_t a = sizes_.size(); a-- > 0;) {
      if (++idx[a] < sizes_[a]) {
        target += out_stride[a];
        break;
      }
      target -= out_stride[a] * (sizes_[a] - 1);
      idx[a] = 0;
    }
  }
  return out;
}

Pmf JointPmf::marginal(std::size_t axis) const {
  return Pmf::from_weights(marginal_table({axis}));
}

JointPmf JointPmf::marginal_joint(const Axes& keep) const {
  std::vector<std::size_t> sizes;
  for (std::size_t a : keep) sizes.push_back(sizes_.at(a));
  return from_weights(std::move(sizes), marginal_table(keep));
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > kLogFloor) h -= p * std::log2(p);
  }
  return h;
}

double entropy(const Pmf& p) { return entropy_of(p.probs()); }

double entropy(const JointPmf& j) { return entropy_of(j.probs()); }

double joint_entropy(const JointPmf& j, const Axes& axes) {
  if (axes.empty()) return 0.0;
  return entropy_of(j.marginal_table(axes));
}

double conditional_entropy(const JointPmf& j, const Axes& target,
                           const Axes& given) {
  check_axes(j, target, false, "target");
  check_axes(j, given, true, "given");
  check_disjoint({&target, &given});
  return joint_entropy(j, join(target, given)) - joint_entropy(j, given);
}

double mutual_information(const JointPmf& j, const Axes& a, const Axes& b) {
  check_axes(j, a, false, "first");
  check_axes(j, b, false, "second");
  check_disjoint({&a, &b});
  return joint_entropy(j, a) + joint_entropy(j, b) -
         joint_entropy(j, join(a, b));
}

double conditional_mutual_information(const JointPmf& j, const Axes& a,
                                      const Axes& b, const Axes& given) {
  check_axes(j, a, false, "first");
  check_axes(j, b, false, "second");
  check_axes(j, given, true, "given");
  check_disjoint({&a, &b, &given});
  const Axes ac = join(a, given);
  const Axes bc = join(b, given);
  const Axes abc = join(ac, b);
  return joint_entropy(j, ac) + joint_entropy(j, bc) - joint_entropy(j, abc) -
         joint_entropy(j, given);
}

double interaction_information(const JointPmf& j, const Axes& a, const Axes& b,
                               const Axes& c) {
  check_axes(j, c, false, "third");
  return mutual_information(j, a, b) - conditional_mutual_information(j, a, b, c);
}

double binary_entropy(double p) {
  const double probs[2] = {p, 1.0 - p};
  return entropy_of(probs);
}

std::string to_text(const JointPmf& j) {
  std::string out = "axes:";
  for (std::size_t s : j.axis_sizes()) out += " " + std::to_string(s);
  out += '\n';
  char buf[40];
  for (double p : j.probs()) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", p);
    out += buf;
  }
  return out;
}

JointPmf joint_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("axes:", 0) != 0) {
    throw ValidationError("JointPmf text: missing 'axes:' header");
  }
  std::vector<std::size_t> sizes;
  {
    std::istringstream header(line.substr(5));
    long long s = 0;
    while (header >> s) {
      if (s <= 0) throw ValidationError("JointPmf text: bad axis size");
      sizes.push_back(static_cast<std::size_t>(s));
    }
    if (!header.eof()) throw ValidationError("JointPmf text: bad header");
  }
  std::vector<double> probs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw ValidationError("JointPmf text: bad probability '" + line + "'");
    }
    probs.push_back(v);
  }
  return JointPmf(std::move(sizes), std::move(probs));
}

}  // namespace gwn
