#pragma once

#include <vector>

#include "magtopt/cell_problems.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/material.hpp"
#include "magtopt/mesh.hpp"
#include "magtopt/parallel.hpp"

namespace magtopt::topo {

/// Tables for the nonlinear correction; a null table disables that term.
struct J2Tables {
  const cell::J2Table* case1 = nullptr;
  const cell::J2Table* case2 = nullptr;
};

/// U0^T M V0 + J2(U0, V0) for nucleating air in ferromagnetic material.
double g_ferro_to_air(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, const cell::J2Table* table_I,
                      long* clamped = nullptr);
/// U0^T M2 V0 + J2(U0, V0) for nucleating ferromagnetic material in air.
double g_air_to_ferro(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, const cell::J2Table* table_II,
                      long* clamped = nullptr);

struct TopoDerivField {
  std::vector<int> design_elements;
  std::vector<double> element_values;  ///< aligned with design_elements
  std::vector<double> j2_part;         ///< J2 contribution per design element
  std::vector<double> nodal;           ///< area-weighted projection; zero off the design region
  int ferro_elements = 0;              ///< elements evaluated with case I
  int air_elements = 0;                ///< elements evaluated with negated case II
  long clamped_lookups = 0;

  double max_abs_j2() const;
};

/// G~ on every DESIGN element: G(f->air) where the element is ferromagnetic,
/// -G(air->f) otherwise, at the element gradients of u0 and p0.
TopoDerivField assemble_generalized_td(const mesh::TriMesh& m, const material::ReluctivityCurve& curve,
                                       const std::vector<char>& ferro, const std::vector<double>& u0,
                                       const std::vector<double>& p0, const J2Tables& tables,
                                       ExecPolicy policy = ExecPolicy::Parallel);

/// Nodal average over incident DESIGN elements weighted by area.
std::vector<double> project_to_nodes(const mesh::TriMesh& m, const std::vector<int>& elements,
                                     const std::vector<double>& values);

}  // namespace magtopt::topo
