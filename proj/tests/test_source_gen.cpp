#include <cmath>
#include <map>

#include "doctest.h"
#include "gwn/source_gen.hpp"

using namespace gwn;

TEST_CASE("base pmf is symmetric on the nine symbols") {
  const Pmf p = build_base_pmf(4.0);
  REQUIRE(p.size() == kSymbolCount);
  for (std::size_t i = 0; i < kSymbolCount; ++i)
    CHECK(p[i] == doctest::Approx(p[kSymbolCount - 1 - i]).epsilon(1e-14));
  const double v = variance_for_entropy(2.5);
  CHECK(entropy(build_base_pmf(v)) == doctest::Approx(2.5).epsilon(1e-8));
}

TEST_CASE("copy positions repeat, independent positions decorrelate") {
  SyntheticSourceSpec spec;
  spec.height = 4;
  spec.width = 4;
  spec.copy_prob = 0.5;
  spec.seed = 4;
  const SyntheticSource src(spec);
  const auto& map = src.dependency_map();
  const std::size_t d = 16, n = 4000;
  const SyntheticBatch b = src.sample_batch(n, 0);
  std::vector<std::size_t> agree(d, 0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < d; ++i) agree[i] += b.x1[s * d + i] == b.x2[s * d + i];
  double p_same = 0.0;
  for (std::size_t k = 0; k < kSymbolCount; ++k) p_same += src.base_pmf()[k] * src.base_pmf()[k];
  for (std::size_t i = 0; i < d; ++i) {
    if (map.is_copy(i)) {
      CHECK(agree[i] == n);
    } else {
      CHECK(std::abs(static_cast<double>(agree[i]) / n - p_same) < 0.05);
    }
  }
  const SourceMeasures m = src.theoretical_measures();
  CHECK(m.mi == doctest::Approx(map.copy_fraction() * entropy(src.base_pmf())).epsilon(1e-12));
  CHECK(m.h_joint + m.mi == doctest::Approx(m.h_sum).epsilon(1e-12));
}

TEST_CASE("targets are an invertible map of the inputs") {
  SyntheticSourceSpec spec;
  spec.seed = 8;
  const SyntheticSource src(spec);
  const SyntheticBatch b = src.sample_batch(10, 3);
  std::vector<double> x(b.x1.begin(), b.x1.begin() + 16), z(b.z1.begin(), b.z1.begin() + 16);
  const auto back = src.target1().invert(z);
  for (std::size_t i = 0; i < 16; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
}

TEST_CASE("batches are reproducible and indexed") {
  SyntheticSourceSpec spec;
  spec.seed = 2;
  const SyntheticSource a(spec), b(spec);
  CHECK(a.sample_batch(5, 7).x1 == b.sample_batch(5, 7).x1);
  CHECK(a.sample_batch(5, 7).x1 != a.sample_batch(5, 8).x1);
}

TEST_CASE("attribute joints have the intended structure") {
  AttributePmfSpec spec;
  spec.kind = AttributeKind::kDependent;
  const JointPmf dep = build_attribute_joint(spec);
  CHECK(mutual_information(dep, {0}, {1}) == doctest::Approx(std::log2(10.0)).epsilon(1e-12));
  spec.kind = AttributeKind::kIndependent;
  CHECK(mutual_information(build_attribute_joint(spec), {0}, {1}) < 1e-12);
  spec.kind = AttributeKind::kMixture;
  const JointPmf mix = build_attribute_joint(spec);
  CHECK(std::abs(entropy(mix) - spec.target_joint_entropy) <= spec.mixture_tol);
  CHECK(std::abs(mutual_information(mix, {0}, {1}) - spec.target_mi) <= spec.mixture_tol);
}

TEST_CASE("attribute vectors decode to their labels") {
  AttributePmfSpec spec;
  spec.kind = AttributeKind::kMixture;
  const AttributeSource src(spec);
  const AttributeBatch b = src.sample_batch(500, 1);
  std::map<std::pair<int, int>, int> seen;
  for (std::size_t s = 0; s < b.n; ++s) {
    const auto [d, c] = decode_attributes(&b.input[s * b.dim]);
    CHECK(d == b.digit[s]);
    CHECK(c == b.color[s]);
    const std::size_t idx[2] = {static_cast<std::size_t>(d), static_cast<std::size_t>(c)};
    CHECK(src.joint().at(idx) > 0.0);
  }
}

TEST_CASE("invalid source specs are rejected") {
  SyntheticSourceSpec spec;
  spec.copy_prob = 1.5;
  CHECK_THROWS_AS(SyntheticSource{spec}, ValidationError);
  spec.copy_prob = 0.5;
  spec.block = 5;
  CHECK_THROWS_AS(SyntheticSource{spec}, ValidationError);
  CHECK_THROWS_AS(attribute_kind_from_string("bogus"), ValidationError);
}
