#pragma once

#include "magtopt/linalg2.hpp"
#include "magtopt/material.hpp"

namespace magtopt::polarization {

inline constexpr double kPi = 3.14159265358979323846;

/// P(I, A~; omega) for a disk of the given area. A~ symmetric positive
/// definite with A~ - I semidefinite.
Mat2 disk(const Mat2& a_tilde, double area = kPi);

/// P(I, A~; omega) for the axis-aligned ellipse with semi-axes a (along x) and b.
Mat2 ellipse(const Mat2& a_tilde, double a, double b);

/// P(A, A~; B(0,1)) for arbitrary symmetric positive definite A, A~ with
/// A^{-1/2} A~ A^{-1/2} - I semidefinite. Reduces to the ellipse formula by
/// the change of variables x -> A^{-1/2} x and a rotation.
Mat2 general(const Mat2& a, const Mat2& a_tilde);

/// Frame whose first column is U0/|U0| (identity at U0 = 0).
Mat2 field_frame(Vec2 u0);

/// P(DT(U0), nu0 I; B(0,1)) in closed form, eigenvalues lambda1 (normal to
/// U0) and lambda2 (along U0).
Mat2 polarization_case1(double lambda1, double lambda2, double nu0, Vec2 u0);
/// P(nu0 I, DT(U0); B(0,1)) in closed form.
Mat2 polarization_case2(double lambda1, double lambda2, double nu0, Vec2 u0);

/// Topological derivative matrix for ferromagnetic -> air.
Mat2 matrix_case1(double lambda1, double lambda2, double nu0, Vec2 u0);
/// Topological derivative matrix for air -> ferromagnetic.
Mat2 matrix_case2(double lambda1, double lambda2, double nu0, Vec2 u0);

Mat2 matrix_case1(const material::ReluctivityCurve& curve, Vec2 u0);
Mat2 matrix_case2(const material::ReluctivityCurve& curve, Vec2 u0);

}  // namespace magtopt::polarization
