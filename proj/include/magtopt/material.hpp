#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "magtopt/linalg2.hpp"

namespace magtopt::material {

/// Reluctivity of vacuum, 1/mu0 in m/H.
inline constexpr double kNuAir = 1.0e7 / (4.0 * 3.14159265358979323846);

/// nu(s) = nu0 (s^{2 alpha} + c tau) / (s^{2 alpha} + tau)
struct MarroccoParams {
  double alpha = 4.0;
  double c = 0.0039;
  double tau = 1.52e6;
};

/// Constant reluctivity. Makes every nonlinear remainder vanish.
struct LinearParams {
  double nu = 0.0039 * kNuAir;
};

/// Clamped cubic spline through (s_i, nu_i); zero slope at the first knot.
/// Beyond the last knot nu approaches nu0 with constant magnetisation:
/// nu(s) = nu0 - (nu0 - nu_last) s_last / s.
struct SplineParams {
  std::vector<double> s;
  std::vector<double> nu;
};

/// Scalar reluctivity law nu_hat(s), s = |B|, and the induced vector maps
/// T(W) = nu_hat(|W|) W and DT(W) = nu_hat I + nu_hat'/|W| W (x) W.
class ReluctivityCurve {
 public:
  static ReluctivityCurve marrocco(const MarroccoParams& p = {}, double nu_air = kNuAir);
  static ReluctivityCurve linear(double nu, double nu_air = kNuAir);
  static ReluctivityCurve spline(SplineParams p, double nu_air = kNuAir);
  /// CSV with header `s,nu`, at least 4 rows, strictly increasing s >= 0.
  static ReluctivityCurve load_spline_csv(const std::filesystem::path& path, double nu_air = kNuAir);

  double nu_air() const { return nu_air_; }
  double nu_min() const { return nu_min_; }
  bool is_linear() const { return std::holds_alternative<LinearParams>(law_); }
  std::string kind() const;

  double nu(double s) const;
  double dnu(double s) const;
  double d2nu(double s) const;
  double d3nu(double s) const;

  Vec2 T(Vec2 w) const;
  Mat2 DT(Vec2 w) const;
  /// T(W+V) - T(W) - DT(W) V; identically zero for the linear law.
  Vec2 S(Vec2 w, Vec2 v) const;

  /// Eigenvalue of DT(W) for directions orthogonal to W (|W| = t).
  double lambda1(double t) const { return nu(t); }
  /// Eigenvalue of DT(W) along W.
  double lambda2(double t) const { return nu(t) + dnu(t) * t; }

  /// Canonical text of the law and its parameters, stable across runs.
  std::string fingerprint() const;
  /// 16 hex digits of the FNV-1a hash of fingerprint().
  std::string hash() const;

  const std::variant<MarroccoParams, LinearParams, SplineParams>& law() const { return law_; }

 private:
  struct SplineData {
    std::vector<double> s, y, m;  // knots, values, second derivatives
  };

  ReluctivityCurve() = default;
  void evaluate(double s, double out[4], int order) const;

  std::variant<MarroccoParams, LinearParams, SplineParams> law_;
  SplineData spline_;
  double nu_air_ = kNuAir;
  double nu_min_ = 0.0;
};

struct AssumptionReport {
  double s_min = 0.0;
  double s_max = 0.0;
  std::size_t samples = 0;

  bool nu_range_ok = false;      ///< 0 < nu_hat(s) <= nu0 on the grid
  bool differential_ok = false;  ///< 0 < lambda1, lambda2 <= nu0 on the grid
  bool bounds_ok = false;        ///< both of the above
  double lambda_min = 0.0;       ///< sampled lower differential bound
  double lambda_max = 0.0;
  double first_violation_s = -1.0;  ///< first s with lambda2 > nu0, or -1

  bool c3_smoothness_ok = false;
  double sup_dnu_over_s = 0.0;
  double sup_d2_nus = 0.0;  ///< sup |(nu_hat s)''|
  double sup_d3_nus = 0.0;  ///< sup |(nu_hat s)'''|

  double delta_nu = 0.0;
  double s_at_delta = 0.0;
  double threshold_r1 = -1.0 / 3.0;
  double threshold_r2 = 0.0;
  bool assumption4_ok = false;

  bool all_ok() const { return bounds_ok && c3_smoothness_ok && assumption4_ok; }
  std::string to_text() const;
};

/// n log-spaced points on [s_min, s_max].
std::vector<double> log_grid(double s_min, double s_max, std::size_t n);
/// 1e4 log-spaced points on [1e-6, 1e4].
std::vector<double> default_assumption_grid();

AssumptionReport validate_assumptions(const ReluctivityCurve& curve, const std::vector<double>& grid);

}  // namespace magtopt::material
