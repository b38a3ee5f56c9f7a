// Rate points emitted by trained codecs, operational curves built from them,
// BD-rate, interpolated mutual-information estimates and gaps to theoretical
// rate-distortion curves.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gwn/rate_distortion.hpp"

namespace gwn {

struct GWRatePoint {
  std::string arch;
  double beta = 1.0;
  double eta = 1.0;
  std::uint64_t seed = 0;
  std::string unit = "bits";  // "bits" per sample or "bpp"
  double R0 = 0.0, R1 = 0.0, R2 = 0.0;
  double Rt = 0.0, Rr = 0.0;
  double D1 = 0.0, D2 = 0.0;
  // Classification accuracy per task; negative for regression tasks.
  double acc1 = -1.0, acc2 = -1.0;
};

// Fills Rt = R0 + R1 + R2 and Rr = 2 R0 + R1 + R2 from the channel rates.
GWRatePoint make_rate_point(std::string arch, double beta, double eta, std::uint64_t seed,
                            double r0, double r1, double r2, double d1, double d2);
// Channel rates divided by `pixels`, sums recomputed.
GWRatePoint to_bpp(const GWRatePoint& p, double pixels);

bool rate_identities_hold(const GWRatePoint& p);
// Throws ValidationError naming the broken identity.
void audit_rate_point(const GWRatePoint& p);

std::string rate_points_csv(const std::vector<GWRatePoint>& points);
// Parses rate_points_csv output; every row is audited.
std::vector<GWRatePoint> parse_rate_points_csv(const std::string& text);
std::string to_json(const GWRatePoint& p);
GWRatePoint rate_point_from_json(const std::string& text);

enum class RateKind { kTransmit, kReceive };
RateKind rate_kind_from_string(const std::string& s);
std::string to_string(RateKind k);

// Samples of an operational rate-distortion curve.
struct OpCurve {
  std::vector<double> distortion;
  std::vector<double> rate;
};

// Distortion axis is (D1 + D2) / 2.
OpCurve curve_from_points(const std::vector<GWRatePoint>& points, RateKind kind);

// Bjontegaard delta rate in percent (negative: `test` needs fewer bits).
// Log-rate is fitted against distortion with a monotone cubic Hermite
// interpolant and the difference averaged over the common distortion range.
double bd_rate(const OpCurve& reference, const OpCurve& test);

struct MiEstimate {
  double distortion = 0.0;
  double mi = 0.0;
  bool extrapolated = false;  // some curve was evaluated outside its samples
};

// I(Z1;Z2) ~ R1(d) + R2(d) - R12(d) at matched distortions (the union of all
// sampled distortions), by piecewise-linear interpolation in each curve.
std::vector<MiEstimate> empirical_mi(const OpCurve& joint, const OpCurve& marginal1,
                                     const OpCurve& marginal2);

struct TheoryGap {
  double distortion = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
  double gap = 0.0;
};

struct TheoryReport {
  std::vector<TheoryGap> gaps;
  double min_gap = 0.0;
  bool consistent = true;  // every gap >= -tol
};

TheoryReport compare_to_theory(const OpCurve& empirical, const RDCurve& theory, double tol = 1e-3);

// BD-rate for every ordered pair of architectures and both rate kinds.
// Keys are "reference/test/kind"; pairs without a usable overlap are skipped.
std::map<std::string, double> bd_rate_matrix(
    const std::map<std::string, std::vector<GWRatePoint>>& by_arch);

}  // namespace gwn
