#include "magtopt/material.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "magtopt/errors.hpp"
#include "magtopt/util.hpp"

namespace magtopt::material {

namespace {

void check_nu_air(double nu_air) {
  if (!(nu_air > 0.0) || !std::isfinite(nu_air)) throw ConfigError("nu_air must be positive and finite");
}

// Clamped cubic spline second derivatives (tridiagonal solve).
std::vector<double> clamped_spline_moments(const std::vector<double>& s, const std::vector<double>& y,
                                           double slope0, double slope1) {
  const std::size_t n = s.size();
  std::vector<double> a(n), b(n), c(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      const double h = s[1] - s[0];
      b[i] = 2.0 * h;
      c[i] = h;
      d[i] = 6.0 * ((y[1] - y[0]) / h - slope0);
    } else if (i == n - 1) {
      const double h = s[n - 1] - s[n - 2];
      a[i] = h;
      b[i] = 2.0 * h;
      d[i] = 6.0 * (slope1 - (y[n - 1] - y[n - 2]) / h);
    } else {
      const double hl = s[i] - s[i - 1], hr = s[i + 1] - s[i];
      a[i] = hl;
      b[i] = 2.0 * (hl + hr);
      c[i] = hr;
      d[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> m(n);
  m[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
  return m;
}

}  // namespace

ReluctivityCurve ReluctivityCurve::marrocco(const MarroccoParams& p, double nu_air) {
  check_nu_air(nu_air);
  if (!(p.alpha > 0.5) || !std::isfinite(p.alpha)) throw ConfigError("marrocco alpha must be > 0.5");
  if (!(p.c > 0.0) || !std::isfinite(p.c)) throw ConfigError("marrocco c must be positive");
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw ConfigError("marrocco tau must be positive");
  ReluctivityCurve r;
  r.law_ = p;
  r.nu_air_ = nu_air;
  r.nu_min_ = std::min(p.c, 1.0) * nu_air;
  return r;
}

ReluctivityCurve ReluctivityCurve::linear(double nu, double nu_air) {
  check_nu_air(nu_air);
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("linear reluctivity must be positive");
  ReluctivityCurve r;
  r.law_ = LinearParams{nu};
  r.nu_air_ = nu_air;
  r.nu_min_ = nu;
  return r;
}

ReluctivityCurve ReluctivityCurve::spline(SplineParams p, double nu_air) {
  check_nu_air(nu_air);
  if (p.s.size() != p.nu.size()) throw ConfigError("spline: s and nu differ in length");
  if (p.s.size() < 4) throw ConfigError("spline: at least 4 knots required");
  for (std::size_t i = 0; i < p.s.size(); ++i) {
    if (!std::isfinite(p.s[i]) || !std::isfinite(p.nu[i])) throw ConfigError("spline: non-finite entry");
    if (p.nu[i] <= 0.0) throw ConfigError("spline: nu must be positive");
    if (i == 0 && p.s[i] < 0.0) throw ConfigError("spline: s must be non-negative");
    if (i > 0 && !(p.s[i] > p.s[i - 1])) throw ConfigError("spline: s must be strictly increasing");
  }
  ReluctivityCurve r;
  r.nu_air_ = nu_air;
  const double sl = p.s.back(), yl = p.nu.back();
  const double tail_slope = sl > 0.0 ? (nu_air - yl) / sl : 0.0;
  r.spline_.s = p.s;
  r.spline_.y = p.nu;
  r.spline_.m = clamped_spline_moments(p.s, p.nu, 0.0, tail_slope);
  r.law_ = std::move(p);
  double lo = std::numeric_limits<double>::infinity();
  const auto& s = r.spline_.s;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    for (int k = 0; k <= 16; ++k) lo = std::min(lo, r.nu(s[i] + (s[i + 1] - s[i]) * k / 16.0));
  lo = std::min(lo, std::min(yl, nu_air));
  if (!(lo > 0.0)) throw ConfigError("spline: interpolant is not positive");
  r.nu_min_ = lo;
  return r;
}

ReluctivityCurve ReluctivityCurve::load_spline_csv(const std::filesystem::path& path, double nu_air) {
  const CsvTable t = read_numeric_csv(path);
  if (t.header.size() != 2 || t.header[0] != "s" || t.header[1] != "nu")
    throw ConfigError(path.string() + ": expected header 's,nu'");
  SplineParams p;
  for (const auto& row : t.rows) {
    p.s.push_back(row[0]);
    p.nu.push_back(row[1]);
  }
  return spline(std::move(p), nu_air);
}

std::string ReluctivityCurve::kind() const {
  if (std::holds_alternative<MarroccoParams>(law_)) return "marrocco";
  if (std::holds_alternative<LinearParams>(law_)) return "linear";
  return "spline";
}

void ReluctivityCurve::evaluate(double s, double out[4], int order) const {
  if (!(s >= 0.0)) throw std::domain_error("reluctivity evaluated at negative or NaN argument");
  out[0] = out[1] = out[2] = out[3] = 0.0;
  if (const auto* lin = std::get_if<LinearParams>(&law_)) {
    out[0] = lin->nu;
    return;
  }
  if (const auto* mp = std::get_if<MarroccoParams>(&law_)) {
    const double p = 2.0 * mp->alpha;
    const double x = std::pow(s, p);
    const double u = x + mp->tau;
    out[0] = nu_air_ * (x + mp->c * mp->tau) / u;
    if (order < 1) return;
    const double amp = -nu_air_ * (1.0 - mp->c) * mp->tau / u;
    const double r1 = p * std::pow(s, p - 1.0) / u;
    out[1] = amp * (-r1);
    if (order < 2) return;
    const double r2 = p * (p - 1.0) * std::pow(s, p - 2.0) / u;
    out[2] = amp * (2.0 * r1 * r1 - r2);
    if (order < 3) return;
    const double r3 = p * (p - 1.0) * (p - 2.0) * std::pow(s, p - 3.0) / u;
    out[3] = amp * (-r3 + 6.0 * r1 * r2 - 6.0 * r1 * r1 * r1);
    return;
  }
  const auto& sp = spline_;
  const std::size_t n = sp.s.size();
  if (s <= sp.s.front()) {
    out[0] = sp.y.front();
    return;
  }
  if (s >= sp.s.back()) {
    const double sl = sp.s.back();
    const double d = (nu_air_ - sp.y.back()) * sl;
    out[0] = nu_air_ - d / s;
    out[1] = d / (s * s);
    out[2] = -2.0 * d / (s * s * s);
    out[3] = 6.0 * d / (s * s * s * s);
    return;
  }
  const auto it = std::upper_bound(sp.s.begin(), sp.s.end(), s);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - sp.s.begin()) - 1, n - 2);
  const double h = sp.s[i + 1] - sp.s[i];
  const double A = (sp.s[i + 1] - s) / h, B = (s - sp.s[i]) / h;
  const double mi = sp.m[i], mj = sp.m[i + 1];
  out[0] = A * sp.y[i] + B * sp.y[i + 1] + ((A * A * A - A) * mi + (B * B * B - B) * mj) * h * h / 6.0;
  out[1] = (sp.y[i + 1] - sp.y[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * mi + (3.0 * B * B - 1.0) / 6.0 * h * mj;
  out[2] = A * mi + B * mj;
  out[3] = (mj - mi) / h;
}

double ReluctivityCurve::nu(double s) const {
  double v[4];
  evaluate(s, v, 0);
  return v[0];
}
double ReluctivityCurve::dnu(double s) const {
  double v[4];
  evaluate(s, v, 1);
  return v[1];
}
double ReluctivityCurve::d2nu(double s) const {
  double v[4];
  evaluate(s, v, 2);
  return v[2];
}
double ReluctivityCurve::d3nu(double s) const {
  double v[4];
  evaluate(s, v, 3);
  return v[3];
}

Vec2 ReluctivityCurve::T(Vec2 w) const { return nu(norm(w)) * w; }

Mat2 ReluctivityCurve::DT(Vec2 w) const {
  const double s = norm(w);
  double v[4];
  evaluate(s, v, 1);
  if (s == 0.0 || is_linear()) return Mat2::diag(v[0], v[0]);
  return Mat2::diag(v[0], v[0]) + Mat2::outer(w, w) * (v[1] / s);
}

Vec2 ReluctivityCurve::S(Vec2 w, Vec2 v) const {
  if (is_linear()) return {};
  return T(w + v) - T(w) - DT(w) * v;
}

std::string ReluctivityCurve::fingerprint() const {
  std::string out;
  if (const auto* mp = std::get_if<MarroccoParams>(&law_)) {
    out = fmt::format("marrocco alpha={} c={} tau={}", fmt17(mp->alpha), fmt17(mp->c), fmt17(mp->tau));
  } else if (const auto* lin = std::get_if<LinearParams>(&law_)) {
    out = fmt::format("linear nu={}", fmt17(lin->nu));
  } else {
    const auto& sp = std::get<SplineParams>(law_);
    out = "spline";
    for (std::size_t i = 0; i < sp.s.size(); ++i) out += fmt::format(" {}:{}", fmt17(sp.s[i]), fmt17(sp.nu[i]));
  }
  out += " nu_air=" + fmt17(nu_air_);
  return out;
}

std::string ReluctivityCurve::hash() const { return hex64(fnv1a64(fingerprint())); }

std::vector<double> log_grid(double s_min, double s_max, std::size_t n) {
  if (!(s_min > 0.0) || !(s_max > s_min) || n < 2) throw ConfigError("log_grid: need 0 < s_min < s_max, n >= 2");
  std::vector<double> g(n);
  const double a = std::log10(s_min), b = std::log10(s_max);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / (n - 1));
  return g;
}

std::vector<double> default_assumption_grid() { return log_grid(1e-6, 1e4, 10000); }

AssumptionReport validate_assumptions(const ReluctivityCurve& curve, const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("validate_assumptions: empty grid");
  AssumptionReport r;
  const double nu0 = curve.nu_air();
  r.s_min = *std::min_element(grid.begin(), grid.end());
  r.s_max = *std::max_element(grid.begin(), grid.end());
  r.samples = grid.size();
  r.nu_range_ok = true;
  r.lambda_min = std::numeric_limits<double>::infinity();
  r.lambda_max = -std::numeric_limits<double>::infinity();
  r.delta_nu = std::numeric_limits<double>::infinity();
  bool finite = true;
  const double tol = 1e-10 * nu0;
  for (double s : grid) {
    double v[4];
    const double nu = curve.nu(s), d1 = curve.dnu(s), d2 = curve.d2nu(s), d3 = curve.d3nu(s);
    v[0] = nu;
    v[1] = d1;
    v[2] = d2;
    v[3] = d3;
    for (double x : v) finite = finite && std::isfinite(x);
    if (!(nu > 0.0) || nu > nu0 + tol) r.nu_range_ok = false;
    const double l1 = nu, l2 = nu + d1 * s;
    r.lambda_min = std::min({r.lambda_min, l1, l2});
    r.lambda_max = std::max({r.lambda_max, l1, l2});
    if (l2 > nu0 + tol && r.first_violation_s < 0.0) r.first_violation_s = s;
    if (s > 0.0) r.sup_dnu_over_s = std::max(r.sup_dnu_over_s, std::abs(d1 / s));
    r.sup_d2_nus = std::max(r.sup_d2_nus, std::abs(2.0 * d1 + d2 * s));
    r.sup_d3_nus = std::max(r.sup_d3_nus, std::abs(3.0 * d2 + d3 * s));
    const double q = d1 * s / nu;
    if (q < r.delta_nu) {
      r.delta_nu = q;
      r.s_at_delta = s;
    }
  }
  r.differential_ok = r.lambda_min > 0.0 && r.lambda_max <= nu0 + tol;
  r.bounds_ok = r.nu_range_ok && r.differential_ok;
  r.c3_smoothness_ok = finite && std::isfinite(r.sup_dnu_over_s) && std::isfinite(r.sup_d2_nus) &&
                       std::isfinite(r.sup_d3_nus);
  const double k1 = (curve.nu_min() - nu0) / nu0;
  r.threshold_r2 = -(1.0 + k1) * (1.0 + k1) / ((1.0 + k1) * (1.0 + k1) + 2.0);
  r.assumption4_ok = r.delta_nu > std::max(r.threshold_r1, r.threshold_r2);
  return r;
}

std::string AssumptionReport::to_text() const {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "grid_s_min = " << fmt17(s_min) << '\n'
    << "grid_s_max = " << fmt17(s_max) << '\n'
    << "grid_samples = " << samples << '\n'
    << "nu_range_ok = " << b(nu_range_ok) << '\n'
    << "differential_ok = " << b(differential_ok) << '\n'
    << "bounds_ok = " << b(bounds_ok) << '\n'
    << "lambda_min = " << fmt17(lambda_min) << '\n'
    << "lambda_max = " << fmt17(lambda_max) << '\n'
    << "first_violation_s = " << fmt17(first_violation_s) << '\n'
    << "c3_smoothness_ok = " << b(c3_smoothness_ok) << '\n'
    << "sup_dnu_over_s = " << fmt17(sup_dnu_over_s) << '\n'
    << "sup_d2_nus = " << fmt17(sup_d2_nus) << '\n'
    << "sup_d3_nus = " << fmt17(sup_d3_nus) << '\n'
    << "delta_nu = " << fmt17(delta_nu) << '\n'
    << "s_at_delta = " << fmt17(s_at_delta) << '\n'
    << "threshold_r1 = " << fmt17(threshold_r1) << '\n'
    << "threshold_r2 = " << fmt17(threshold_r2) << '\n'
    << "assumption4_ok = " << b(assumption4_ok) << '\n';
  return o.str();
}

}  // namespace magtopt::material
