#include "magtopt/topo_derivative.hpp"

#include <algorithm>
#include <cmath>

#include "magtopt/polarization.hpp"

namespace magtopt::topo {

double g_ferro_to_air(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, const cell::J2Table* table_I,
                      long* clamped) {
  if (u0 == Vec2{}) return 0.0;
  const double j1 = bilinear(u0, polarization::matrix_case1(curve, u0), v0);
  const double j2 = table_I ? cell::eval_j2(*table_I, u0, v0, clamped) : 0.0;
  return j1 + j2;
}

double g_air_to_ferro(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, const cell::J2Table* table_II,
                      long* clamped) {
  if (u0 == Vec2{}) return 0.0;
  const double j1 = bilinear(u0, polarization::matrix_case2(curve, u0), v0);
  const double j2 = table_II ? cell::eval_j2(*table_II, u0, v0, clamped) : 0.0;
  return j1 + j2;
}

double TopoDerivField::max_abs_j2() const {
  double m = 0.0;
  for (double v : j2_part) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> project_to_nodes(const mesh::TriMesh& m, const std::vector<int>& elements,
                                     const std::vector<double>& values) {
  std::vector<double> num(m.nodes.size(), 0.0), den(m.nodes.size(), 0.0);
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const int t = elements[i];
    const double a = m.area(t);
    for (int v : m.tris[t]) {
      num[v] += a * values[i];
      den[v] += a;
    }
  }
  for (std::size_t v = 0; v < num.size(); ++v) num[v] = den[v] > 0.0 ? num[v] / den[v] : 0.0;
  return num;
}

TopoDerivField assemble_generalized_td(const mesh::TriMesh& m, const material::ReluctivityCurve& curve,
                                       const std::vector<char>& ferro, const std::vector<double>& u0,
                                       const std::vector<double>& p0, const J2Tables& tables, ExecPolicy policy) {
  if (ferro.size() != m.tris.size() || u0.size() != m.nodes.size() || p0.size() != m.nodes.size())
    throw std::invalid_argument("assemble_generalized_td: size mismatch");
  TopoDerivField f;
  for (int t = 0; t < m.num_tris(); ++t)
    if (m.regions[t] == mesh::Region::Design) f.design_elements.push_back(t);
  const auto n = static_cast<std::ptrdiff_t>(f.design_elements.size());
  f.element_values.assign(n, 0.0);
  f.j2_part.assign(n, 0.0);
  std::vector<long> clamps(n, 0);
  for_each_index(policy, n, [&](std::ptrdiff_t i) {
    const int t = f.design_elements[i];
    const Vec2 gu = m.gradient(t, u0), gp = m.gradient(t, p0);
    if (ferro[t]) {
      const double full = g_ferro_to_air(curve, gu, gp, tables.case1, &clamps[i]);
      f.element_values[i] = full;
      f.j2_part[i] = tables.case1 && gu != Vec2{} ? cell::eval_j2(*tables.case1, gu, gp) : 0.0;
    } else {
      const double full = g_air_to_ferro(curve, gu, gp, tables.case2, &clamps[i]);
      f.element_values[i] = -full;
      f.j2_part[i] = tables.case2 && gu != Vec2{} ? -cell::eval_j2(*tables.case2, gu, gp) : 0.0;
    }
  });
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (ferro[f.design_elements[i]]) ++f.ferro_elements;
    else ++f.air_elements;
    f.clamped_lookups += clamps[i];
  }
  f.nodal = project_to_nodes(m, f.design_elements, f.element_values);
  return f;
}

}  // namespace magtopt::topo
