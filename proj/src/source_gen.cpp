#include "gwn/source_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gwn {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
  cdf.back() = 1.0;
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform();
  return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

}  // namespace

Pmf build_base_pmf(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ValidationError("base PMF variance must be positive");
  }
  const double sigma = std::sqrt(variance);
  std::vector<double> p(kSymbolCount);
  for (int k = kSymbolMin; k <= kSymbolMax; ++k) {
    const double hi = k == kSymbolMax ? 1.0 : normal_cdf((k + 0.5) / sigma);
    const double lo = k == kSymbolMin ? 0.0 : normal_cdf((k - 0.5) / sigma);
    p[k - kSymbolMin] = hi - lo;
  }
  // Symmetrise exactly; the two cdf evaluations round differently.
  for (std::size_t i = 0; i < kSymbolCount / 2; ++i) {
    const double m = 0.5 * (p[i] + p[kSymbolCount - 1 - i]);
    p[i] = p[kSymbolCount - 1 - i] = m;
  }
  return Pmf::from_weights(std::move(p));
}

double variance_for_entropy(double target_bits) {
  auto h = [](double v) { return entropy(build_base_pmf(v)); };
  // Entropy rises with variance until the boundary bins start to dominate.
  double a = 0.01, b = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (h(m1) < h(m2)) a = m1; else b = m2;
  }
  const double v_peak = 0.5 * (a + b);
  if (target_bits > h(v_peak) || target_bits < h(0.01)) {
    throw ValidationError("no base PMF variance gives the requested entropy");
  }
  double lo = 0.01, hi = v_peak;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) < target_bits) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

void validate(const SyntheticSourceSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw ValidationError("spatial size must be positive");
  if (!(spec.copy_prob >= 0.0 && spec.copy_prob <= 1.0)) {
    throw ValidationError("copy_prob must lie in [0, 1]");
  }
  const std::size_t n = spec.height * spec.width;
  const std::size_t b = spec.block == 0 ? n : spec.block;
  if (n % b != 0) throw ValidationError("target block size must divide height*width");
}

DependencyMap::DependencyMap(const SyntheticSourceSpec& spec) {
  validate(spec);
  Rng rng = Rng(spec.seed).split(1);
  copy_.resize(spec.height * spec.width);
  for (std::size_t i = 0; i < copy_.size(); ++i) copy_[i] = rng.bernoulli(spec.copy_prob);
}

double DependencyMap::copy_fraction() const {
  if (copy_.empty()) return 0.0;
  return static_cast<double>(std::count(copy_.begin(), copy_.end(), true)) /
         static_cast<double>(copy_.size());
}

TargetMap::TargetMap(std::size_t block, Rng rng) : block_(block) {
  if (block == 0) throw ValidationError("target block must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(block));
  lower_.assign(block * block, 0.0);
  upper_.assign(block * block, 0.0);
  for (std::size_t i = 0; i < block; ++i)
    for (std::size_t j = 0; j < block; ++j) {
      if (j < i) lower_[i * block + j] = scale * (2.0 * rng.uniform() - 1.0);
      if (j > i) upper_[i * block + j] = scale * (2.0 * rng.uniform() - 1.0);
    }
  // A = L U with unit diagonals on both factors.
  a_.assign(block * block, 0.0);
  for (std::size_t i = 0; i < block; ++i)
    for (std::size_t j = 0; j < block; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k <= std::min(i, j); ++k) {
        const double l = k == i ? 1.0 : lower_[i * block + k];
        const double u = k == j ? 1.0 : upper_[k * block + j];
        v += l * u;
      }
      a_[i * block + j] = v;
    }
}

std::vector<double> TargetMap::apply(const std::vector<double>& x) const {
  if (x.size() % block_ != 0) throw std::invalid_argument("TargetMap: size not a multiple of block");
  std::vector<double> z(x.size(), 0.0);
  for (std::size_t off = 0; off < x.size(); off += block_)
    for (std::size_t i = 0; i < block_; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < block_; ++j) v += a_[i * block_ + j] * x[off + j];
      z[off + i] = v;
    }
  return z;
}

std::vector<double> TargetMap::invert(const std::vector<double>& z) const {
  if (z.size() % block_ != 0) throw std::invalid_argument("TargetMap: size not a multiple of block");
  std::vector<double> x(z.size());
  std::vector<double> y(block_);
  for (std::size_t off = 0; off < z.size(); off += block_) {
    for (std::size_t i = 0; i < block_; ++i) {
      double v = z[off + i];
      for (std::size_t k = 0; k < i; ++k) v -= lower_[i * block_ + k] * y[k];
      y[i] = v;
    }
    for (std::size_t i = block_; i-- > 0;) {
      double v = y[i];
      for (std::size_t k = i + 1; k < block_; ++k) v -= upper_[i * block_ + k] * x[off + k];
      x[off + i] = v;
    }
  }
  return x;
}

namespace {
std::size_t block_of(const SyntheticSourceSpec& s) {
  validate(s);
  return s.block == 0 ? s.height * s.width : s.block;
}
}  // namespace

SyntheticSource::SyntheticSource(const SyntheticSourceSpec& spec)
    : spec_(spec),
      base_(build_base_pmf(spec.variance)),
      map_(spec),
      t1_(block_of(spec), Rng(spec.seed).split(3)),
      t2_(block_of(spec), Rng(spec.seed).split(4)),
      cdf_(cumulative(base_.probs())) {}

SyntheticBatch SyntheticSource::sample_batch(std::size_t n, std::uint64_t batch_index) const {
  if (n == 0) throw std::invalid_argument("sample_batch: n must be positive");
  const std::size_t m = spec_.height * spec_.width;
  SyntheticBatch b;
  b.n = n;
  b.height = spec_.height;
  b.width = spec_.width;
  b.x1.resize(n * m);
  b.x2.resize(n * m);
  Rng rng = Rng(spec_.seed).split(2).split(batch_index);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < m; ++i) {
      const double a = static_cast<double>(draw(cdf_, rng)) + kSymbolMin;
      b.x1[s * m + i] = a;
      b.x2[s * m + i] = map_.is_copy(i) ? a : static_cast<double>(draw(cdf_, rng)) + kSymbolMin;
    }
  b.z1.resize(n * m);
  b.z2.resize(n * m);
  for (std::size_t s = 0; s < n; ++s) {
    const std::vector<double> a(b.x1.begin() + s * m, b.x1.begin() + (s + 1) * m);
    const std::vector<double> c(b.x2.begin() + s * m, b.x2.begin() + (s + 1) * m);
    const std::vector<double> za = t1_.apply(a);
    const std::vector<double> zc = t2_.apply(c);
    std::copy(za.begin(), za.end(), b.z1.begin() + s * m);
    std::copy(zc.begin(), zc.end(), b.z2.begin() + s * m);
  }
  return b;
}

SourceMeasures theoretical_measures(const Pmf& base, const DependencyMap& map) {
  const double h = entropy(base);
  const double c = map.copy_fraction();
  SourceMeasures m;
  m.h_sum = 2.0 * h;
  m.mi = c * h;
  m.h_joint = m.h_sum - m.mi;
  return m;
}

SourceMeasures SyntheticSource::theoretical_measures() const {
  return gwn::theoretical_measures(base_, map_);
}

// --- attribute sources ---

AttributeKind attribute_kind_from_string(const std::string& s) {
  if (s == "dependent") return AttributeKind::kDependent;
  if (s == "independent") return AttributeKind::kIndependent;
  if (s == "mixture") return AttributeKind::kMixture;
  throw ValidationError("unknown attribute kind '" + s + "'");
}

std::string to_string(AttributeKind k) {
  switch (k) {
    case AttributeKind::kDependent: return "dependent";
    case AttributeKind::kIndependent: return "independent";
    case AttributeKind::kMixture: return "mixture";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kC = kAttributeClasses;

// Joint with uniform digits and colour uniform over each digit's subset.
std::vector<double> subset_joint(const std::vector<unsigned>& masks) {
  std::vector<double> w(kC * kC, 0.0);
  for (std::size_t d = 0; d < kC; ++d) {
    const int size = __builtin_popcount(masks[d]);
    for (std::size_t c = 0; c < kC; ++c)
      if (masks[d] >> c & 1u) w[d * kC + c] = 1.0 / (kC * size);
  }
  return w;
}

std::pair<double, double> subset_measures(const std::vector<unsigned>& masks) {
  const std::vector<double> w = subset_joint(masks);
  std::vector<double> pc(kC, 0.0);
  for (std::size_t d = 0; d < kC; ++d)
    for (std::size_t c = 0; c < kC; ++c) pc[c] += w[d * kC + c];
  const double hj = entropy_of(w);
  const double hd = std::log2(static_cast<double>(kC));
  return {hj, hd + entropy_of(pc) - hj};
}

}  // namespace

JointPmf build_attribute_joint(const AttributePmfSpec& spec) {
  std::vector<double> w(kC * kC, 0.0);
  switch (spec.kind) {
    case AttributeKind::kDependent: {
      std::vector<std::size_t> perm(kC);
      for (std::size_t i = 0; i < kC; ++i) perm[i] = i;
      Rng rng = Rng(spec.seed).split(7);
      for (std::size_t i = kC - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      for (std::size_t d = 0; d < kC; ++d) w[d * kC + perm[d]] = 1.0;
      break;
    }
    case AttributeKind::kIndependent:
      std::fill(w.begin(), w.end(), 1.0);
      break;
    case AttributeKind::kMixture: {
      auto score = [&](const std::vector<unsigned>& m) {
        const auto [hj, mi] = subset_measures(m);
        return std::abs(hj - spec.target_joint_entropy) + std::abs(mi - spec.target_mi);
      };
      Rng rng = Rng(spec.seed).split(8);
      std::vector<unsigned> best;
      double best_score = std::numeric_limits<double>::infinity();
      for (int restart = 0; restart < 64 && best_score > 1e-3; ++restart) {
        std::vector<unsigned> m(kC, 0u);
        for (std::size_t d = 0; d < kC; ++d) {
          const std::size_t size = 1 + rng.below(kC);
          while (static_cast<std::size_t>(__builtin_popcount(m[d])) < size)
            m[d] |= 1u << rng.below(kC);
        }
        double cur = score(m);
        // First-improvement hill climbing over single colour toggles.
        bool improved = true;
        while (improved) {
          improved = false;
          for (std::size_t d = 0; d < kC && !improved; ++d)
            for (std::size_t c = 0; c < kC && !improved; ++c) {
              const unsigned flipped = m[d] ^ (1u << c);
              if (flipped == 0u) continue;
              const unsigned old = m[d];
              m[d] = flipped;
              const double s = score(m);
              if (s < cur - 1e-12) {
                cur = s;
                improved = true;
              } else {
                m[d] = old;
              }
            }
        }
        if (cur < best_score) {
          best_score = cur;
          best = m;
        }
      }
      const auto [hj, mi] = subset_measures(best);
      if (std::abs(hj - spec.target_joint_entropy) > spec.mixture_tol ||
          std::abs(mi - spec.target_mi) > spec.mixture_tol) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "mixture search missed its targets: best H = %.4f, I = %.4f bits", hj, mi);
        throw NumericalError(buf);
      }
      w = subset_joint(best);
      break;
    }
  }
  return JointPmf::from_weights({kC, kC}, std::move(w));
}

AttributeSource::AttributeSource(const AttributePmfSpec& spec)
    : spec_(spec), joint_(build_attribute_joint(spec)), cdf_(cumulative(joint_.probs())) {
  if (spec.embedding_dim < 2 * kC) {
    throw ValidationError("attribute embedding_dim must be at least 20");
  }
  if (!(spec.noise_scale >= 0.0)) throw ValidationError("noise_scale must be >= 0");
}

AttributeBatch AttributeSource::sample_batch(std::size_t n, std::uint64_t batch_index) const {
  if (n == 0) throw std::invalid_argument("sample_batch: n must be positive");
  AttributeBatch b;
  b.n = n;
  b.dim = spec_.embedding_dim;
  b.input.assign(n * b.dim, 0.0);
  b.digit.resize(n);
  b.color.resize(n);
  Rng rng = Rng(spec_.seed).split(9).split(batch_index);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t cell = draw(cdf_, rng);
    b.digit[s] = static_cast<int>(cell / kC);
    b.color[s] = static_cast<int>(cell % kC);
    double* v = &b.input[s * b.dim];
    v[b.digit[s]] = 1.0;
    v[kC + b.color[s]] = 1.0;
    for (std::size_t k = 0; k < b.dim; ++k) v[k] += spec_.noise_scale * rng.normal();
  }
  return b;
}

std::pair<int, int> decode_attributes(const double* vec) {
  const auto d = std::max_element(vec, vec + kC) - vec;
  const auto c = std::max_element(vec + kC, vec + 2 * kC) - (vec + kC);
  return {static_cast<int>(d), static_cast<int>(c)};
}

}  // namespace gwn
