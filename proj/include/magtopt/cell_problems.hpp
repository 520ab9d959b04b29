#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "magtopt/fem.hpp"
#include "magtopt/material.hpp"
#include "magtopt/mesh.hpp"

namespace magtopt::cell {

/// I: air inclusion in ferromagnetic background. II: ferromagnetic inclusion in air.
enum class Case { I, II };

std::string_view to_string(Case c);
Case case_from_string(std::string_view s);

/// Truncated disc with the unit inclusion, its FE system, and material flags.
class CellDomain {
 public:
  explicit CellDomain(const mesh::DiscSpec& spec = {});
  CellDomain(const CellDomain&) = delete;
  CellDomain& operator=(const CellDomain&) = delete;

  const mesh::DiscSpec& spec() const { return spec_; }
  const mesh::TriMesh& mesh() const { return *mesh_; }
  const fem::FemSystem& system() const { return *system_; }
  bool in_inclusion(int t) const { return inclusion_[t] != 0; }
  /// Elements carrying the nonlinear law for the given case.
  std::vector<char> nonlinear_flags(Case c) const;

 private:
  mesh::DiscSpec spec_;
  std::unique_ptr<mesh::TriMesh> mesh_;
  std::unique_ptr<fem::FemSystem> system_;
  std::vector<char> inclusion_;
};

struct CellSolution {
  const CellDomain* domain = nullptr;
  std::vector<double> values;
  Case cell_case = Case::I;
  Vec2 u0;
  Vec2 v0;
  int newton_iterations = 0;

  Vec2 gradient(int t) const { return domain->system().gradient(t, values); }
};

/// Nonlinear transmission problem for the variation of the direct state.
CellSolution solve_H(const material::ReluctivityCurve& curve, Vec2 u0, Case c, const CellDomain& d,
                     const fem::NewtonOptions& opt = {});

/// Linear transmission problem for the variation of the adjoint state.
CellSolution solve_K(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Case c, const CellDomain& d,
                     ExecPolicy policy = ExecPolicy::Parallel);
/// K for several V0 sharing one factorisation.
std::vector<CellSolution> solve_K_multi(const material::ReluctivityCurve& curve, Vec2 u0,
                                        const std::vector<Vec2>& v0s, Case c, const CellDomain& d,
                                        ExecPolicy policy = ExecPolicy::Parallel);

/// Closed-form K for case II on the whole plane.
double analytic_K_case2(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Vec2 x);

/// Integral of S_U0(grad H) . (V0 + grad K) over the exterior (case I) or
/// the inclusion (case II), one-point quadrature.
double j2_integral(const material::ReluctivityCurve& curve, const CellSolution& h, const CellSolution& k);
double compute_J2(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Case c, const CellDomain& d);

struct J2Table {
  Case cell_case = Case::I;
  std::vector<double> t;
  std::vector<double> j2_e1;  ///< J2(t e1, e1)
  std::vector<double> j2_e2;  ///< J2(t e1, e2)
  double radius = 0.0;
  double h0 = 0.0;
  double grading = 0.0;
  std::string curve_hash;
};

/// n equispaced points on [0, t_max]; a single point when t_max = 0.
std::vector<double> make_t_grid(double t_max, int samples);

/// One H solve and one two-column K solve per t. Samples run concurrently
/// under the parallel policy; output is independent of the schedule.
J2Table build_j2_table(const material::ReluctivityCurve& curve, Case c, const std::vector<double>& t_grid,
                       const mesh::DiscSpec& disc, ExecPolicy policy = ExecPolicy::Parallel);

/// s cos(phi - theta) J21(t) + s sin(phi - theta) J22(t), linear in t,
/// clamped to the grid. `clamped` counts lookups beyond the last sample.
double eval_j2(const J2Table& table, Vec2 u0, Vec2 v0, long* clamped = nullptr);

void write_j2_table(const J2Table& table, const std::filesystem::path& path, std::string_view extra_comment = {});
J2Table read_j2_table(const std::filesystem::path& path);

}  // namespace magtopt::cell
