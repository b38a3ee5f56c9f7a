#include <cmath>

#include "doctest.h"
#include "gwn/pmf.hpp"
#include "gwn/rng.hpp"

using namespace gwn;

namespace {

JointPmf random_joint(Rng& rng, std::vector<std::size_t> sizes) {
  std::size_t cells = 1;
  for (auto s : sizes) cells *= s;
  return JointPmf::from_weights(sizes, rng.dirichlet(cells, 0.7));
}

// Direct -sum p log2 p over a marginal computed by brute-force index loops.
double brute_marginal_entropy(const JointPmf& j, const Axes& keep) {
  std::vector<std::size_t> sizes;
  for (auto a : keep) sizes.push_back(j.axis_size(a));
  std::size_t cells = 1;
  for (auto s : sizes) cells *= s;
  std::vector<double> m(cells, 0.0);
  for (std::size_t f = 0; f < j.cell_count(); ++f) {
    const auto idx = j.unflatten(f);
    std::size_t k = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) k = k * sizes[i] + idx[keep[i]];
    m[k] += j.probs()[f];
  }
  double h = 0.0;
  for (double p : m)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

}  // namespace

TEST_CASE("pmf rejects bad mass and shapes") {
  CHECK_THROWS_AS(Pmf({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(Pmf({-0.1, 1.1}), ValidationError);
  CHECK_THROWS_AS(Pmf(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(JointPmf({2, 2}, {0.25, 0.25, 0.5}), ValidationError);
  CHECK_THROWS_AS(JointPmf({4}, {0.25, 0.25, 0.25, 0.25}), ValidationError);
  CHECK_THROWS_AS(Pmf::from_weights({0.0, 0.0}), ValidationError);
}

TEST_CASE("entropy of simple tables") {
  CHECK(entropy(Pmf::uniform(8)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(entropy(Pmf::point_mass(5, 2)) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(0.11) == doctest::Approx(0.4999157).epsilon(1e-6));
}

TEST_CASE("marginal entropies agree with brute-force loops") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const JointPmf j = random_joint(rng, {2 + rng.below(3), 2 + rng.below(3), 2 + rng.below(2)});
    for (const Axes& keep : {Axes{0}, Axes{1, 2}, Axes{2, 0}, Axes{0, 1, 2}}) {
      CHECK(joint_entropy(j, keep) ==
            doctest::Approx(brute_marginal_entropy(j, keep)).epsilon(1e-12));
    }
  }
}

TEST_CASE("information identities on random joints") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const JointPmf j = random_joint(rng, {2 + rng.below(3), 2 + rng.below(3), 2 + rng.below(3)});
    const double i_ab = mutual_information(j, {0}, {1});
    CHECK(i_ab >= -1e-12);
    CHECK(mutual_information(j, {1}, {0}) == doctest::Approx(i_ab).epsilon(1e-12));
    CHECK(conditional_mutual_information(j, {0}, {1}, {2}) >= -1e-12);
    // Interaction information is symmetric in its three arguments.
    const double ii = interaction_information(j, {0}, {1}, {2});
    CHECK(std::abs(interaction_information(j, {1}, {2}, {0}) - ii) < 1e-10);
    CHECK(std::abs(interaction_information(j, {2}, {0}, {1}) - ii) < 1e-10);
  }
}

TEST_CASE("xor triple has interaction information -1") {
  std::vector<double> p(8, 0.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) p[a * 4 + b * 2 + (a ^ b)] = 0.25;
  const JointPmf j({2, 2, 2}, p);
  CHECK(std::abs(interaction_information(j, {0}, {1}, {2}) + 1.0) <= 1e-12);
}

TEST_CASE("text round trip") {
  Rng rng(3);
  const JointPmf j = random_joint(rng, {3, 2, 2});
  const JointPmf back = joint_from_text(to_text(j));
  REQUIRE(back.cell_count() == j.cell_count());
  for (std::size_t i = 0; i < j.cell_count(); ++i) CHECK(back.probs()[i] == j.probs()[i]);
  CHECK_THROWS_AS(joint_from_text("axes: 2 2\n0.5\n0.5\n"), ValidationError);
}
