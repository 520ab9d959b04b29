#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "magtopt/linalg2.hpp"
#include "magtopt/material.hpp"
#include "magtopt/mesh.hpp"
#include "magtopt/parallel.hpp"

namespace magtopt::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Impressed sources per triangle. Current density only on COIL, magnetisation
/// only on MAGNET triangles.
struct SourceSpec {
  std::vector<double> jz;
  std::vector<Vec2> magnetization;

  static SourceSpec zeros(const mesh::TriMesh& m);
  void set_current(const mesh::TriMesh& m, double jz_value);
  void set_magnetization(const mesh::TriMesh& m, const std::function<Vec2(Vec2)>& field);
  /// Throws ConfigError if a source lives outside its region.
  void check(const mesh::TriMesh& m) const;
};

/// Element is ferromagnetic iff FERRO_FIXED, or DESIGN with psi(centroid) > 0.
std::vector<char> ferro_mask(const mesh::TriMesh& m, const std::vector<double>& levelset);
double centroid_value(const mesh::TriMesh& m, int t, const std::vector<double>& nodal);

/// F_i = sum_e |e| (M_perp . grad phi_i + J_z / 3), M_perp = (-M2, M1).
Vector assemble_rhs(const mesh::TriMesh& m, const SourceSpec& s);
/// Load of a smooth density f with the three-point edge-midpoint rule.
Vector assemble_load(const mesh::TriMesh& m, const std::function<double(Vec2)>& f);

/// Free-DOF numbering, element geometry and a fixed sparsity pattern with
/// per-element scatter slots. Immutable after construction.
class FemSystem {
 public:
  FemSystem(const mesh::TriMesh& m, std::vector<char> dirichlet);
  explicit FemSystem(const mesh::TriMesh& m) : FemSystem(m, m.dirichlet_nodes()) {}

  const mesh::TriMesh& mesh() const { return *mesh_; }
  int num_free() const { return num_free_; }
  int dof(int node) const { return dof_[node]; }
  const std::vector<char>& dirichlet() const { return dirichlet_; }
  double area(int t) const { return area_[t]; }
  const std::array<Vec2, 3>& grads(int t) const { return grads_[t]; }
  Vec2 gradient(int t, const std::vector<double>& u) const;

  /// Zero-valued matrix with the free-free pattern.
  const SparseMatrix& pattern() const { return pattern_; }
  /// Position in the value array of local pair (a, b) of element t, or -1.
  int slot(int t, int a, int b) const { return slots_[9 * static_cast<std::size_t>(t) + 3 * a + b]; }

  Vector restrict_to_free(const Vector& full) const;
  std::vector<double> expand(const Vector& free, const std::vector<double>& dirichlet_values) const;

 private:
  const mesh::TriMesh* mesh_;
  std::vector<char> dirichlet_;
  std::vector<int> dof_;
  int num_free_ = 0;
  std::vector<double> area_;
  std::vector<std::array<Vec2, 3>> grads_;
  SparseMatrix pattern_;
  std::vector<int> slots_;
};

/// Element coefficients of sum_e int_e [T_e(B_e + grad u) - T_e(B_e)] . grad phi_i.
/// T_e is the curve on nonlinear elements and nu_air elsewhere; B_e is a
/// constant background field (zero when `background` is empty).
struct Coefficients {
  const material::ReluctivityCurve* curve = nullptr;
  std::vector<char> nonlinear;
  std::vector<Vec2> background;

  Vec2 flux(int t, Vec2 grad_u) const;
  Mat2 tangent(int t, Vec2 grad_u) const;
};

struct Tangent {
  Vector residual;  ///< free DOFs, includes -F
  SparseMatrix jacobian;
};

/// Residual and Jacobian at u. Parallel path computes element locals
/// concurrently and scatters in element order; results match the serial path
/// bit for bit.
Tangent assemble_tangent(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u,
                         const Vector& load_full, ExecPolicy policy = ExecPolicy::Parallel);
/// Residual only.
Vector assemble_residual(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u,
                         const Vector& load_full, ExecPolicy policy = ExecPolicy::Parallel);

/// Sparse LDL^T with the symbolic analysis done once per pattern.
class LinearSolver {
 public:
  explicit LinearSolver(const SparseMatrix& pattern);
  void factorize(const SparseMatrix& a);
  Vector solve(const Vector& b) const;

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

struct NewtonOptions {
  double tol_abs = 1e-10;
  double tol_rel = 1e-10;
  int max_iter = 50;
  int max_halvings = 20;
  ExecPolicy policy = ExecPolicy::Parallel;
};

struct NewtonResult {
  std::vector<double> u;
  int iterations = 0;
  std::vector<double> residual_history;
  double load_norm = 0.0;
  SparseMatrix jacobian;  ///< tangent at the returned u
};

/// Damped Newton: each accepted step strictly decreases the residual norm.
NewtonResult solve_quasilinear(const FemSystem& sys, const Coefficients& c, const Vector& load_full,
                               std::vector<double> initial, const NewtonOptions& opt = {});

/// Converged state u0 with the data needed by the adjoint solve.
struct StateSolution {
  std::vector<double> u;
  std::vector<char> ferro;
  int newton_iterations = 0;
  std::vector<double> residual_history;
  SparseMatrix jacobian;
};

StateSolution solve_state(const FemSystem& sys, const material::ReluctivityCurve& curve,
                          const std::vector<char>& ferro, const Vector& rhs, const NewtonOptions& opt = {},
                          const std::vector<double>* initial = nullptr);
StateSolution solve_state(const mesh::TriMesh& m, const material::ReluctivityCurve& curve,
                          const std::vector<double>& levelset, const SourceSpec& sources,
                          const NewtonOptions& opt = {});

/// Solves DT(grad u0) p . grad phi_i = -adjoint_rhs_i with p = 0 on the
/// Dirichlet boundary, reusing the state Jacobian.
std::vector<double> solve_adjoint(const FemSystem& sys, const StateSolution& state, const Vector& adjoint_rhs_full);

/// Element values of |grad u|.
std::vector<double> flux_density_magnitude(const FemSystem& sys, const std::vector<double>& u);

}  // namespace magtopt::fem
