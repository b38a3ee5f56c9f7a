#include "gwn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "gwn/pmf.hpp"
#include "json.hpp"

namespace gwn {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 record splitting, quoted fields may hold commas and line breaks.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<std::string> kColumns = {"arch", "beta", "eta", "seed", "unit", "R1", "R2",
                                           "R0",   "Rt",   "Rr",  "D1",   "D2",   "acc1", "acc2"};

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("csv: column " + what + " holds '" + s + "', not a number");
  }
}

// Sorted by distortion with duplicate distortions merged by mean rate.
OpCurve normalised(const OpCurve& c, const char* who) {
  if (c.distortion.size() != c.rate.size()) {
    throw ValidationError(std::string(who) + ": distortion and rate lengths differ");
  }
  std::vector<std::size_t> idx(c.rate.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return c.distortion[a] < c.distortion[b] ||
           (c.distortion[a] == c.distortion[b] && c.rate[a] < c.rate[b]);
  });
  OpCurve out;
  std::size_t run = 0;
  for (std::size_t k : idx) {
    if (!std::isfinite(c.distortion[k]) || !std::isfinite(c.rate[k])) {
      throw ValidationError(std::string(who) + ": non-finite curve sample");
    }
    if (!out.distortion.empty() && out.distortion.back() == c.distortion[k]) {
      ++run;
      out.rate.back() += (c.rate[k] - out.rate.back()) / static_cast<double>(run);
    } else {
      out.distortion.push_back(c.distortion[k]);
      out.rate.push_back(c.rate[k]);
      run = 1;
    }
  }
  return out;
}

// Fritsch-Carlson monotone cubic Hermite interpolant.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    if (n == 1) return;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      m_[0] = m_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    m_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double operator()(double t) const {
    const std::size_t n = x_.size();
    if (n == 1) return y_[0];
    std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) -
                                             x_.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * m_[i] +
           (-2 * s3 + 3 * s2) * y_[i + 1] + (s3 - s2) * h * m_[i + 1];
  }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(m) > std::abs(3.0 * d0)) m = 3.0 * d0;
    return m;
  }

  std::vector<double> x_, y_, m_;
};

double linear_at(const OpCurve& c, double d, bool& extrapolated) {
  const auto& x = c.distortion;
  const auto& y = c.rate;
  if (x.size() == 1) {
    if (d != x[0]) extrapolated = true;
    return y[0];
  }
  std::size_t i;
  if (d < x.front()) {
    extrapolated = true;
    i = 0;
  } else if (d > x.back()) {
    extrapolated = true;
    i = x.size() - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), d) - x.begin());
    i = std::clamp<std::size_t>(i, 1, x.size() - 1) - 1;
  }
  const double t = (d - x[i]) / (x[i + 1] - x[i]);
  return y[i] + t * (y[i + 1] - y[i]);
}

}  // namespace

GWRatePoint make_rate_point(std::string arch, double beta, double eta, std::uint64_t seed,
                            double r0, double r1, double r2, double d1, double d2) {
  GWRatePoint p;
  p.arch = std::move(arch);
  p.beta = beta;
  p.eta = eta;
  p.seed = seed;
  p.R0 = r0;
  p.R1 = r1;
  p.R2 = r2;
  p.Rt = r0 + r1 + r2;
  p.Rr = 2.0 * r0 + r1 + r2;
  p.D1 = d1;
  p.D2 = d2;
  return p;
}

GWRatePoint to_bpp(const GWRatePoint& p, double pixels) {
  if (!(pixels > 0.0)) throw ValidationError("to_bpp: pixel count must be positive");
  if (p.unit != "bits") throw ValidationError("to_bpp: point is already in " + p.unit);
  GWRatePoint q = p;
  q.unit = "bpp";
  q.R0 = p.R0 / pixels;
  q.R1 = p.R1 / pixels;
  q.R2 = p.R2 / pixels;
  q.Rt = q.R0 + q.R1 + q.R2;
  q.Rr = 2.0 * q.R0 + q.R1 + q.R2;
  return q;
}

bool rate_identities_hold(const GWRatePoint& p) {
  return p.Rt == p.R0 + p.R1 + p.R2 && p.Rr == 2.0 * p.R0 + p.R1 + p.R2;
}

void audit_rate_point(const GWRatePoint& p) {
  if (p.Rt != p.R0 + p.R1 + p.R2) {
    throw ValidationError("rate point (" + p.arch + "): Rt " + num(p.Rt) + " != R0+R1+R2 " +
                          num(p.R0 + p.R1 + p.R2));
  }
  if (p.Rr != 2.0 * p.R0 + p.R1 + p.R2) {
    throw ValidationError("rate point (" + p.arch + "): Rr " + num(p.Rr) + " != 2R0+R1+R2 " +
                          num(2.0 * p.R0 + p.R1 + p.R2));
  }
}

std::string rate_points_csv(const std::vector<GWRatePoint>& points) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) out += (i ? "," : "") + kColumns[i];
  out += "\r\n";
  for (const GWRatePoint& p : points) {
    out += csv_field(p.arch) + "," + num(p.beta) + "," + num(p.eta) + "," +
           std::to_string(p.seed) + "," + csv_field(p.unit) + "," + num(p.R1) + "," +
           num(p.R2) + "," + num(p.R0) + "," + num(p.Rt) + "," + num(p.Rr) + "," + num(p.D1) +
           "," + num(p.D2) + "," + num(p.acc1) + "," + num(p.acc2) + "\r\n";
  }
  return out;
}

std::vector<GWRatePoint> parse_rate_points_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ValidationError("csv: missing header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  for (const char* need : {"arch", "R0", "R1", "R2", "Rt", "Rr", "D1", "D2"}) {
    if (!col.count(need)) throw ValidationError(std::string("csv: missing column ") + need);
  }
  auto get = [&](const std::vector<std::string>& r, const std::string& name, double fallback) {
    auto it = col.find(name);
    if (it == col.end()) return fallback;
    if (it->second >= r.size()) throw ValidationError("csv: short row");
    return parse_double(r[it->second], name);
  };
  std::vector<GWRatePoint> out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (r.size() != rows[0].size()) {
      throw ValidationError("csv: row " + std::to_string(k) + " has " + std::to_string(r.size()) +
                            " fields, header has " + std::to_string(rows[0].size()));
    }
    GWRatePoint p;
    p.arch = r[col["arch"]];
    p.beta = get(r, "beta", 1.0);
    p.eta = get(r, "eta", 1.0);
    p.seed = static_cast<std::uint64_t>(get(r, "seed", 0.0));
    if (col.count("unit")) p.unit = r[col["unit"]];
    p.R0 = get(r, "R0", 0);
    p.R1 = get(r, "R1", 0);
    p.R2 = get(r, "R2", 0);
    p.Rt = get(r, "Rt", 0);
    p.Rr = get(r, "Rr", 0);
    p.D1 = get(r, "D1", 0);
    p.D2 = get(r, "D2", 0);
    p.acc1 = get(r, "acc1", -1);
    p.acc2 = get(r, "acc2", -1);
    audit_rate_point(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::string to_json(const GWRatePoint& p) {
  nlohmann::ordered_json j;
  j["arch"] = p.arch;
  j["beta"] = p.beta;
  j["eta"] = p.eta;
  j["seed"] = p.seed;
  j["unit"] = p.unit;
  j["R1"] = p.R1;
  j["R2"] = p.R2;
  j["R0"] = p.R0;
  j["Rt"] = p.Rt;
  j["Rr"] = p.Rr;
  j["D1"] = p.D1;
  j["D2"] = p.D2;
  j["acc1"] = p.acc1;
  j["acc2"] = p.acc2;
  return j.dump(2);
}

GWRatePoint rate_point_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GWRatePoint p;
  p.arch = j.at("arch").get<std::string>();
  p.beta = j.value("beta", 1.0);
  p.eta = j.value("eta", 1.0);
  p.seed = j.value("seed", std::uint64_t{0});
  p.unit = j.value("unit", std::string("bits"));
  p.R0 = j.at("R0").get<double>();
  p.R1 = j.at("R1").get<double>();
  p.R2 = j.at("R2").get<double>();
  p.Rt = j.at("Rt").get<double>();
  p.Rr = j.at("Rr").get<double>();
  p.D1 = j.at("D1").get<double>();
  p.D2 = j.at("D2").get<double>();
  p.acc1 = j.value("acc1", -1.0);
  p.acc2 = j.value("acc2", -1.0);
  audit_rate_point(p);
  return p;
}

RateKind rate_kind_from_string(const std::string& s) {
  if (s == "transmit") return RateKind::kTransmit;
  if (s == "receive") return RateKind::kReceive;
  throw ValidationError("rate kind must be 'transmit' or 'receive', got '" + s + "'");
}

std::string to_string(RateKind k) { return k == RateKind::kTransmit ? "transmit" : "receive"; }

OpCurve curve_from_points(const std::vector<GWRatePoint>& points, RateKind kind) {
  OpCurve c;
  for (const GWRatePoint& p : points) {
    c.distortion.push_back(0.5 * (p.D1 + p.D2));
    c.rate.push_back(kind == RateKind::kTransmit ? p.Rt : p.Rr);
  }
  return c;
}

double bd_rate(const OpCurve& reference, const OpCurve& test) {
  const OpCurve a = normalised(reference, "bd_rate reference");
  const OpCurve b = normalised(test, "bd_rate test");
  if (a.rate.size() < 4 || b.rate.size() < 4) {
    throw ValidationError("bd_rate: each curve needs at least 4 distinct distortion points");
  }
  for (const OpCurve* c : {&a, &b})
    for (double r : c->rate)
      if (!(r > 0.0)) throw ValidationError("bd_rate: rates must be positive");
  const double lo = std::max(a.distortion.front(), b.distortion.front());
  const double hi = std::min(a.distortion.back(), b.distortion.back());
  if (!(hi > lo)) {
    throw ValidationError("bd_rate: distortion ranges do not overlap ([" +
                          num(a.distortion.front()) + ", " + num(a.distortion.back()) +
                          "] vs [" + num(b.distortion.front()) + ", " +
                          num(b.distortion.back()) + "])");
  }
  auto logs = [](const std::vector<double>& r) {
    std::vector<double> out;
    for (double v : r) out.push_back(std::log(v));
    return out;
  };
  const Pchip fa(a.distortion, logs(a.rate));
  const Pchip fb(b.distortion, logs(b.rate));
  constexpr int kIntervals = 1000;  // Simpson, even count
  const double h = (hi - lo) / kIntervals;
  double acc = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double x = lo + h * i;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * (fb(x) - fa(x));
  }
  const double mean_diff = acc * h / 3.0 / (hi - lo);
  return (std::exp(mean_diff) - 1.0) * 100.0;
}

std::vector<MiEstimate> empirical_mi(const OpCurve& joint, const OpCurve& marginal1,
                                     const OpCurve& marginal2) {
  const OpCurve j = normalised(joint, "empirical_mi joint");
  const OpCurve m1 = normalised(marginal1, "empirical_mi marginal1");
  const OpCurve m2 = normalised(marginal2, "empirical_mi marginal2");
  for (const OpCurve* c : {&j, &m1, &m2})
    if (c->rate.empty()) throw ValidationError("empirical_mi: empty curve");
  const double lo = std::max({j.distortion.front(), m1.distortion.front(), m2.distortion.front()});
  const double hi = std::min({j.distortion.back(), m1.distortion.back(), m2.distortion.back()});
  if (lo > hi) throw ValidationError("empirical_mi: distortion ranges do not overlap");
  std::vector<double> ds;
  for (const OpCurve* c : {&j, &m1, &m2}) ds.insert(ds.end(), c->distortion.begin(), c->distortion.end());
  std::sort(ds.begin(), ds.end());
  ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
  std::vector<MiEstimate> out;
  for (double d : ds) {
    MiEstimate e;
    e.distortion = d;
    const double r1 = linear_at(m1, d, e.extrapolated);
    const double r2 = linear_at(m2, d, e.extrapolated);
    const double r12 = linear_at(j, d, e.extrapolated);
    e.mi = r1 + r2 - r12;
    out.push_back(e);
  }
  return out;
}

TheoryReport compare_to_theory(const OpCurve& empirical, const RDCurve& theory, double tol) {
  if (theory.points.empty()) throw ValidationError("compare_to_theory: empty theoretical curve");
  if (empirical.distortion.size() != empirical.rate.size()) {
    throw ValidationError("compare_to_theory: distortion and rate lengths differ");
  }
  TheoryReport rep;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < empirical.rate.size(); ++i) {
    TheoryGap g;
    g.distortion = empirical.distortion[i];
    g.empirical = empirical.rate[i];
    g.theoretical = interpolate_rate(theory, g.distortion);
    g.gap = g.empirical - g.theoretical;
    rep.min_gap = std::min(rep.min_gap, g.gap);
    if (g.gap < -tol) rep.consistent = false;
    rep.gaps.push_back(g);
  }
  if (rep.gaps.empty()) rep.min_gap = 0.0;
  return rep;
}

std::map<std::string, double> bd_rate_matrix(
    const std::map<std::string, std::vector<GWRatePoint>>& by_arch) {
  std::map<std::string, double> out;
  for (const auto& [ref, rp] : by_arch) {
    for (const auto& [tst, tp] : by_arch) {
      if (ref == tst) continue;
      for (RateKind k : {RateKind::kTransmit, RateKind::kReceive}) {
        try {
          out[ref + "/" + tst + "/" + to_string(k)] =
              bd_rate(curve_from_points(rp, k), curve_from_points(tp, k));
        } catch (const ValidationError&) {
        }
      }
    }
  }
  return out;
}

}  // namespace gwn
