#include "magtopt/linalg2.hpp"

#include <algorithm>
#include <stdexcept>

namespace magtopt {

Mat2 Mat2::inverse() const {
  const double d = det();
  if (d == 0.0 || !std::isfinite(d)) throw std::domain_error("Mat2::inverse: singular matrix");
  return {a22 / d, -a12 / d, -a21 / d, a11 / d};
}

double Mat2::max_abs() const {
  return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

std::ostream& operator<<(std::ostream& os, const Mat2& m) {
  return os << "[[" << m.a11 << ", " << m.a12 << "], [" << m.a21 << ", " << m.a22 << "]]";
}

Mat2 SymEigen::compose(double d1, double d2) const {
  const Mat2 r = rotation();
  return r * Mat2::diag(d1, d2) * r.transpose();
}

SymEigen sym_eigen(const Mat2& m) {
  const double b = 0.5 * (m.a12 + m.a21);
  const double half_diff = 0.5 * (m.a11 - m.a22);
  const double mean = 0.5 * (m.a11 + m.a22);
  const double rad = std::hypot(half_diff, b);
  SymEigen e;
  e.l1 = mean + rad;
  e.l2 = mean - rad;
  e.angle = (rad == 0.0) ? 0.0 : 0.5 * std::atan2(b, half_diff);
  return e;
}

Mat2 sym_sqrt(const Mat2& spd) {
  const SymEigen e = sym_eigen(spd);
  if (!(e.l2 > 0.0)) throw std::domain_error("sym_sqrt: matrix is not positive definite");
  return e.compose(std::sqrt(e.l1), std::sqrt(e.l2));
}

Mat2 sym_inv_sqrt(const Mat2& spd) {
  const SymEigen e = sym_eigen(spd);
  if (!(e.l2 > 0.0)) throw std::domain_error("sym_inv_sqrt: matrix is not positive definite");
  return e.compose(1.0 / std::sqrt(e.l1), 1.0 / std::sqrt(e.l2));
}

bool is_symmetric(const Mat2& m, double rel_tol) {
  return std::abs(m.a12 - m.a21) <= rel_tol * std::max(1.0, m.max_abs());
}

double max_abs_diff(const Mat2& a, const Mat2& b) { return (a - b).max_abs(); }

}  // namespace magtopt
