#include <cmath>

#include "doctest.h"
#include "gwn/rate_distortion.hpp"
#include "gwn/rng.hpp"

using namespace gwn;

TEST_CASE("binary hamming curve matches 1 - h(D)") {
  const Pmf p = Pmf::uniform(2);
  const auto d = DistortionMatrix::hamming(2);
  for (double s : {-0.5, -1.0, -2.0, -3.5}) {
    const RDPoint pt = ba_marginal(p, d, s);
    CHECK(pt.converged);
    // Optimal test channel flips with probability e^s / (1 + e^s).
    const double dstar = std::exp(s) / (1.0 + std::exp(s));
    CHECK(pt.distortion == doctest::Approx(dstar).epsilon(1e-7));
    CHECK(pt.rate == doctest::Approx(1.0 - binary_entropy(dstar)).epsilon(1e-7));
    CHECK(pt.rate >= pt.lower_bound - 1e-12);
  }
}

TEST_CASE("slope zero gives the zero-rate point") {
  const Pmf p({0.7, 0.3});
  const RDPoint pt = ba_marginal(p, DistortionMatrix::hamming(2), 0.0);
  CHECK(pt.rate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pt.distortion == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("joint BA on independent sources adds marginal rates") {
  Rng rng(9);
  for (int t = 0; t < 5; ++t) {
    const Pmf a = Pmf::from_weights(rng.dirichlet(3, 2.0));
    const Pmf b = Pmf::from_weights(rng.dirichlet(3, 2.0));
    const auto d = DistortionMatrix::hamming(3);
    const double s = -2.0 - t * 0.5;
    const JointRDPoint j = ba_joint(JointPmf::product(a, b), d, d, s, s);
    const RDPoint ra = ba_marginal(a, d, s), rb = ba_marginal(b, d, s);
    CHECK(std::abs(j.rate - (ra.rate + rb.rate)) < 1e-6);
    CHECK(std::abs(j.distortion1 - ra.distortion) < 1e-6);
    CHECK(std::abs(j.distortion2 - rb.distortion) < 1e-6);
  }
}

TEST_CASE("squared-error curve is decreasing and convex") {
  const std::vector<double> v = {-2, -1, 0, 1, 2};
  const Pmf p({0.1, 0.2, 0.4, 0.2, 0.1});
  const auto d = DistortionMatrix::squared_error(v, v);
  std::vector<double> slopes;
  for (int i = 0; i < 12; ++i) slopes.push_back(-0.1 * std::pow(1.6, i));
  const RDCurve c = sweep_curve([&](double s) { return ba_marginal(p, d, s); }, slopes);
  REQUIRE(c.points.size() >= 10);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].distortion >= c.points[i - 1].distortion);
    CHECK(c.points[i].rate <= c.points[i - 1].rate + 1e-9);
  }
  for (std::size_t i = 1; i + 1 < c.points.size(); ++i) {
    const auto &a = c.points[i - 1], &b = c.points[i], &e = c.points[i + 1];
    const double chord =
        a.rate + (e.rate - a.rate) * (b.distortion - a.distortion) / (e.distortion - a.distortion);
    CHECK(b.rate <= chord + 1e-7);
  }
  CHECK(c.points.front().rate <= entropy(p) + 1e-9);
}

TEST_CASE("conditional RD with fully informative side information is zero") {
  std::vector<double> cells(9, 0.0);
  for (int i = 0; i < 3; ++i) cells[i * 3 + i] = 1.0 / 3;
  const JointPmf j({3, 3}, cells);
  const RDPoint pt = ba_conditional(j, {1}, DistortionMatrix::hamming(3), -4.0);
  CHECK(pt.rate == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pt.distortion == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("interpolation clamps at the ends") {
  RDCurve c;
  c.points = {{2.0, 0.1, -3, true, 1, 0}, {1.0, 0.2, -2, true, 1, 0}, {0.0, 0.5, 0, true, 1, 0}};
  CHECK(interpolate_rate(c, 0.15) == doctest::Approx(1.5));
  CHECK(interpolate_rate(c, 0.0) == doctest::Approx(2.0));
  CHECK(interpolate_rate(c, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("bad inputs are rejected") {
  CHECK_THROWS_AS(ba_marginal(Pmf::uniform(2), DistortionMatrix::hamming(3), -1.0),
                  ValidationError);
  CHECK_THROWS_AS(ba_marginal(Pmf::uniform(2), DistortionMatrix::hamming(2), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(DistortionMatrix(2, 2, {0, -1, 1, 0}), ValidationError);
}
