#include <cmath>

#include "doctest.h"
#include "gwn/evaluation.hpp"
#include "gwn/pmf.hpp"

using namespace gwn;

namespace {

OpCurve curve(double factor) {
  OpCurve c;
  for (double d : {0.2, 0.5, 0.9, 1.4, 2.0}) {
    c.distortion.push_back(d);
    c.rate.push_back(factor * 10.0 * std::exp(-1.3 * d));
  }
  return c;
}

std::vector<GWRatePoint> sample_points() {
  std::vector<GWRatePoint> pts;
  pts.push_back(make_rate_point("shared", 1.0, 0.1, 3, 1.25, 0.5, 0.75, 1.1, 0.9));
  pts.push_back(make_rate_point("joint", 1.5, 0.03, 4, 0.1 + 0.2, 0.0, 0.0, 2.0 / 3.0, 1e-17));
  pts.back().acc1 = 0.95;
  pts.push_back(make_rate_point("independent", 2.0, 1.0, 5, 0.0, 3.3, 1e-300, 0.0, 4.0));
  return pts;
}

}  // namespace

TEST_CASE("BD-rate of scaled curves") {
  // Constant rate ratios give exactly that ratio at every distortion.
  CHECK(bd_rate(curve(1.0), curve(0.5)) == doctest::Approx(-50.0).epsilon(1e-9));
  CHECK(bd_rate(curve(1.0), curve(2.0)) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(bd_rate(curve(1.0), curve(1.0)) == doctest::Approx(0.0));
}

TEST_CASE("BD-rate needs four points and an overlap") {
  OpCurve few = curve(1.0);
  few.distortion.resize(3);
  few.rate.resize(3);
  CHECK_THROWS_AS(bd_rate(few, curve(1.0)), ValidationError);
  OpCurve shifted = curve(1.0);
  for (auto& d : shifted.distortion) d += 10.0;
  CHECK_THROWS_AS(bd_rate(curve(1.0), shifted), ValidationError);
}

TEST_CASE("rate identities are exact") {
  for (const auto& p : sample_points()) {
    CHECK(p.Rt == p.R0 + p.R1 + p.R2);
    CHECK(p.Rr == 2.0 * p.R0 + p.R1 + p.R2);
    CHECK(rate_identities_hold(p));
    CHECK(rate_identities_hold(to_bpp(p, 16.0)));
  }
  GWRatePoint bad = sample_points()[0];
  bad.Rt += 1e-15;
  CHECK_FALSE(rate_identities_hold(bad));
  CHECK_THROWS_AS(audit_rate_point(bad), ValidationError);
}

TEST_CASE("CSV round trip is bit-exact") {
  const auto pts = sample_points();
  const std::string csv = rate_points_csv(pts);
  CHECK(csv.find("\r\n") != std::string::npos);
  const auto back = parse_rate_points_csv(csv);
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].arch == pts[i].arch);
    CHECK(back[i].seed == pts[i].seed);
    CHECK(back[i].R0 == pts[i].R0);
    CHECK(back[i].R2 == pts[i].R2);
    CHECK(back[i].Rr == pts[i].Rr);
    CHECK(back[i].D2 == pts[i].D2);
    CHECK(back[i].acc1 == pts[i].acc1);
  }
  const GWRatePoint j = rate_point_from_json(to_json(pts[1]));
  CHECK(j.R0 == pts[1].R0);
  CHECK(j.D1 == pts[1].D1);
}

TEST_CASE("CSV parser rejects rows that break the identities") {
  std::string csv = rate_points_csv(sample_points());
  const auto pos = csv.find("shared");
  REQUIRE(pos != std::string::npos);
  // Corrupt R1 of the first row so Rt no longer matches.
  const auto line_end = csv.find("\r\n", pos);
  std::string row = csv.substr(pos, line_end - pos);
  std::vector<std::string> f;
  std::size_t s = 0, e;
  while ((e = row.find(',', s)) != std::string::npos) {
    f.push_back(row.substr(s, e - s));
    s = e + 1;
  }
  f.push_back(row.substr(s));
  f[5] = "0.625";
  std::string fixed;
  for (std::size_t i = 0; i < f.size(); ++i) fixed += (i ? "," : "") + f[i];
  csv.replace(pos, row.size(), fixed);
  CHECK_THROWS_AS(parse_rate_points_csv(csv), ValidationError);
}

TEST_CASE("empirical mutual information at matched distortions") {
  OpCurve joint, m1, m2;
  joint.distortion = {0.0, 1.0, 2.0};
  joint.rate = {6.0, 3.0, 1.0};
  m1.distortion = {0.0, 2.0};
  m1.rate = {4.0, 1.0};
  m2.distortion = {0.0, 1.0, 2.0};
  m2.rate = {4.0, 2.0, 0.5};
  const auto est = empirical_mi(joint, m1, m2);
  REQUIRE(est.size() == 3);
  CHECK(est[0].mi == doctest::Approx(2.0));
  CHECK(est[1].mi == doctest::Approx(2.5 + 2.0 - 3.0));
  CHECK(est[2].mi == doctest::Approx(0.5));
  for (const auto& e : est) CHECK_FALSE(e.extrapolated);
}

TEST_CASE("operational curves never beat theory by construction") {
  RDCurve th;
  for (double d = 0.05; d < 0.5; d += 0.05) {
    RDPoint p;
    p.distortion = d;
    p.rate = 1.0 - binary_entropy(d);
    th.points.push_back(p);
  }
  OpCurve above;
  above.distortion = {0.1, 0.2, 0.3};
  for (double d : above.distortion) above.rate.push_back(1.05 - binary_entropy(d));
  CHECK(compare_to_theory(above, th).consistent);
  OpCurve below = above;
  below.rate[1] -= 0.1;
  const TheoryReport r = compare_to_theory(below, th);
  CHECK_FALSE(r.consistent);
  CHECK(r.min_gap < -0.04);
}

TEST_CASE("BD matrix covers ordered pairs and both rate kinds") {
  std::map<std::string, std::vector<GWRatePoint>> by;
  for (double eta : {0.03, 0.1, 0.3, 1.0}) {
    const double r = 10.0 / (1.0 + 10 * eta);
    by["a"].push_back(make_rate_point("a", 1, eta, 1, r, 0.2 * r, 0.2 * r, eta, eta));
    by["b"].push_back(make_rate_point("b", 1, eta, 1, 0.5 * r, 0.2 * r, 0.2 * r, eta, eta));
  }
  const auto m = bd_rate_matrix(by);
  CHECK(m.count("a/b/transmit") == 1);
  CHECK(m.count("b/a/receive") == 1);
  CHECK(m.at("a/b/transmit") < 0.0);
  CHECK(m.at("b/a/transmit") > 0.0);
}
