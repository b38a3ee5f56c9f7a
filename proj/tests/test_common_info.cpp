#include <cmath>

#include "doctest.h"
#include "gwn/common_info.hpp"
#include "gwn/rng.hpp"

using namespace gwn;

namespace {

JointPmf copy_joint(std::size_t n) {
  std::vector<double> p(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 1.0 / n;
  return JointPmf({n, n}, p);
}

JointPmf dsbs(double a0) { return JointPmf({2, 2}, {(1 - a0) / 2, a0 / 2, a0 / 2, (1 - a0) / 2}); }

}  // namespace

TEST_CASE("Gacs-Korner equals the entropy of the block index") {
  // Two blocks of mass 0.3 and 0.7 after permuting rows and columns.
  const JointPmf j({3, 3}, {0.0, 0.3, 0.0, 0.35, 0.0, 0.2, 0.1, 0.0, 0.05});
  const CommonInfoResult r = gk_common_information_lossless(j);
  CHECK(r.value_bits == doctest::Approx(binary_entropy(0.3)).epsilon(1e-12));
  const SupportComponents sc = support_components(j);
  CHECK(sc.mass.size() == 2);
  CHECK(sc.of_x1[1] == sc.of_x2[0]);
  CHECK(sc.of_x1[2] == sc.of_x2[2]);
}

TEST_CASE("Gacs-Korner is zero for a connected support") {
  CHECK(gk_common_information_lossless(dsbs(0.2)).value_bits == 0.0);
  CHECK(gk_common_information_lossless(copy_joint(4)).value_bits ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Wyner common information on DSBS matches the closed form") {
  const double a0 = 0.1;
  const double a1 = (1.0 - std::sqrt(1.0 - 2.0 * a0)) / 2.0;
  const double closed = 1.0 + binary_entropy(a0) - 2.0 * binary_entropy(a1);
  const CommonInfoResult r = wyner_common_information_lossless(dsbs(a0));
  CHECK(r.feasible);
  CHECK(std::abs(r.value_bits - closed) < 1e-3);
}

TEST_CASE("Wyner edge cases") {
  CHECK(wyner_common_information_lossless(copy_joint(3)).value_bits ==
        doctest::Approx(std::log2(3.0)).epsilon(1e-6));
  const JointPmf ind = JointPmf::product(Pmf({0.2, 0.8}), Pmf({0.5, 0.3, 0.2}));
  CHECK(wyner_common_information_lossless(ind).value_bits < 1e-6);
}

TEST_CASE("common information sandwiches mutual information") {
  Rng rng(21);
  for (int t = 0; t < 4; ++t) {
    const JointPmf j = JointPmf::from_weights({2, 3}, rng.dirichlet(6, 1.0));
    const double k = gk_common_information_lossless(j).value_bits;
    const double i = mutual_information(j, {0}, {1});
    WynerOptions wo;
    wo.seed = t + 1;
    const CommonInfoResult c = wyner_common_information_lossless(j, wo);
    CHECK(k <= i + 1e-12);
    CHECK(i <= c.value_bits + 1e-6);
    CHECK(c.value_bits <= std::min(entropy(j.marginal(0)), entropy(j.marginal(1))) + 1e-6);
  }
}

TEST_CASE("ordering holds on random 3x3 joints") {
  Rng rng(77);
  const auto d = DistortionMatrix::hamming(3);
  for (int t = 0; t < 3; ++t) {
    const JointPmf j = JointPmf::from_weights({3, 3}, rng.dirichlet(9, 1.0));
    BoundCheckOptions opts;
    opts.wyner.seed = t + 1;
    const BoundCheckReport r = check_theorem1(j, d, d, 0.2, 0.2, opts);
    CHECK(r.ordering_satisfied);
    CHECK(r.gk_value <= r.max_receive_ii + 1e-9 + r.certification_slack);
    CHECK(r.max_receive_ii <= r.min_transmit_ii + 1e-9 + r.certification_slack);
  }
}

TEST_CASE("discrete objective: copy source costs log2(3), independent costs H1 + H2") {
  const auto d = DistortionMatrix::hamming(3);
  const GWDiscreteResult c =
      gw_objective_discrete(copy_joint(3), d, d, 0.0, 0.0, 1.0, 1.0, {9, 3, 3});
  CHECK(c.exhaustive);
  CHECK(c.T_value == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
  const JointPmf ind = JointPmf::product(Pmf::uniform(3), Pmf::uniform(3));
  const GWDiscreteResult i = gw_objective_discrete(ind, d, d, 0.0, 0.0, 1.0, 1.0, {9, 3, 3});
  CHECK(i.T_value == doctest::Approx(2.0 * std::log2(3.0)).epsilon(1e-12));
  CHECK(i.distortion1 == 0.0);
}

TEST_CASE("discrete objective rejects weights outside the tradeoff region") {
  const auto d = DistortionMatrix::hamming(3);
  CHECK_THROWS_AS(gw_objective_discrete(copy_joint(3), d, d, 0, 0, 0.2, 0.3, {3, 3, 3}),
                  ValidationError);
  CHECK_THROWS_AS(gw_objective_discrete(copy_joint(3), d, d, 0, 0, 1.5, 0.5, {3, 3, 3}),
                  ValidationError);
}
