#include "magtopt/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace magtopt::polarization {

namespace {

Mat2 symmetrize(const Mat2& m) {
  const double off = 0.5 * (m.a12 + m.a21);
  return {m.a11, off, off, m.a22};
}

void require_spd(const Mat2& m, const char* what) {
  if (!is_symmetric(m)) throw std::invalid_argument(std::string(what) + " is not symmetric");
  if (!(sym_eigen(m).l2 > 0.0)) throw std::invalid_argument(std::string(what) + " is not positive definite");
}

void require_semidefinite_contrast(const Mat2& a_tilde) {
  const SymEigen e = sym_eigen(a_tilde - Mat2::identity());
  const double tol = 1e-14 * std::max(1.0, a_tilde.max_abs());
  if (e.l1 > tol && e.l2 < -tol) throw std::invalid_argument("A~ - I is indefinite");
}

}  // namespace

Mat2 disk(const Mat2& a_tilde, double area) {
  require_spd(a_tilde, "A~");
  require_semidefinite_contrast(a_tilde);
  const Mat2 d = a_tilde - Mat2::identity();
  return symmetrize((a_tilde + Mat2::identity()).inverse() * d * (2.0 * area));
}

Mat2 ellipse(const Mat2& a_tilde, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ellipse semi-axes must be positive");
  require_spd(a_tilde, "A~");
  require_semidefinite_contrast(a_tilde);
  const double c = (a - b) / (2.0 * (a + b));
  const Mat2 half_minus_c = Mat2::diag(0.5 - c, 0.5 + c);
  const Mat2 d = a_tilde - Mat2::identity();
  const Mat2 lhs = Mat2::identity() + d * half_minus_c;
  return symmetrize(lhs.inverse() * d * (kPi * a * b));
}

Mat2 general(const Mat2& a, const Mat2& a_tilde) {
  require_spd(a, "A");
  require_spd(a_tilde, "A~");
  const SymEigen ea = sym_eigen(a);
  const Mat2 q = ea.rotation();
  const Mat2 sqrt_a = ea.compose(std::sqrt(ea.l1), std::sqrt(ea.l2));
  const Mat2 inv_sqrt_a = ea.compose(1.0 / std::sqrt(ea.l1), 1.0 / std::sqrt(ea.l2));
  const Mat2 b = symmetrize(inv_sqrt_a * a_tilde * inv_sqrt_a);
  // A^{-1/2} B(0,1) = Q E with E axis-aligned, semi-axes l1^{-1/2}, l2^{-1/2}.
  const Mat2 b_local = symmetrize(q.transpose() * b * q);
  const Mat2 p_local = ellipse(b_local, 1.0 / std::sqrt(ea.l1), 1.0 / std::sqrt(ea.l2));
  const Mat2 p = q * p_local * q.transpose();
  const double det_sqrt = std::sqrt(ea.l1 * ea.l2);
  return symmetrize(sqrt_a * p * sqrt_a * det_sqrt);
}

Mat2 field_frame(Vec2 u0) {
  const double t = norm(u0);
  if (t == 0.0) return Mat2::identity();
  return Mat2::frame(u0 / t);
}

Mat2 polarization_case1(double l1, double l2, double nu0, Vec2 u0) {
  const double g = std::sqrt(l1 * l2);
  const Mat2 r = field_frame(u0);
  const Mat2 d = Mat2::diag((l2 + g) * (nu0 - l2) / (nu0 + g), (l1 + g) * (nu0 - l1) / (nu0 + g));
  return symmetrize(r * d * r.transpose() * kPi);
}

Mat2 polarization_case2(double l1, double l2, double nu0, Vec2 u0) {
  const Mat2 r = field_frame(u0);
  const Mat2 d = Mat2::diag((l2 - nu0) / (l2 + nu0), (l1 - nu0) / (l1 + nu0));
  return symmetrize(r * d * r.transpose() * (2.0 * kPi * nu0));
}

Mat2 matrix_case1(double l1, double l2, double nu0, Vec2 u0) {
  const double g = std::sqrt(l1 * l2);
  const Mat2 r = field_frame(u0);
  const Mat2 d = Mat2::diag((l2 + g) / (nu0 + g), (l1 + g) / (nu0 + g));
  return symmetrize(r * d * r.transpose() * ((nu0 - l1) * kPi));
}

Mat2 matrix_case2(double l1, double l2, double nu0, Vec2 u0) {
  const Mat2 r = field_frame(u0);
  const Mat2 d = Mat2::diag((l1 - nu0) / (l2 + nu0), (l1 - nu0) / (l1 + nu0));
  return symmetrize(r * d * r.transpose() * (2.0 * kPi * nu0));
}

Mat2 matrix_case1(const material::ReluctivityCurve& curve, Vec2 u0) {
  const double t = norm(u0);
  return matrix_case1(curve.lambda1(t), curve.lambda2(t), curve.nu_air(), u0);
}

Mat2 matrix_case2(const material::ReluctivityCurve& curve, Vec2 u0) {
  const double t = norm(u0);
  return matrix_case2(curve.lambda1(t), curve.lambda2(t), curve.nu_air(), u0);
}

}  // namespace magtopt::polarization
