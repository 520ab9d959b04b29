#include "magtopt/fem.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "magtopt/errors.hpp"

namespace magtopt::fem {

using mesh::Region;
using mesh::TriMesh;

SourceSpec SourceSpec::zeros(const TriMesh& m) {
  SourceSpec s;
  s.jz.assign(m.tris.size(), 0.0);
  s.magnetization.assign(m.tris.size(), Vec2{});
  return s;
}

void SourceSpec::set_current(const TriMesh& m, double jz_value) {
  jz.assign(m.tris.size(), 0.0);
  for (int t = 0; t < m.num_tris(); ++t)
    if (m.regions[t] == Region::Coil) jz[t] = jz_value;
}

void SourceSpec::set_magnetization(const TriMesh& m, const std::function<Vec2(Vec2)>& field) {
  magnetization.assign(m.tris.size(), Vec2{});
  for (int t = 0; t < m.num_tris(); ++t)
    if (m.regions[t] == Region::Magnet) magnetization[t] = field(m.centroid(t));
}

void SourceSpec::check(const TriMesh& m) const {
  if (jz.size() != m.tris.size() || magnetization.size() != m.tris.size())
    throw ConfigError("source arrays do not match the mesh");
  for (int t = 0; t < m.num_tris(); ++t) {
    if (jz[t] != 0.0 && m.regions[t] != Region::Coil)
      throw ConfigError(fmt::format("current density on non-coil triangle {}", t));
    if (magnetization[t] != Vec2{} && m.regions[t] != Region::Magnet)
      throw ConfigError(fmt::format("magnetisation on non-magnet triangle {}", t));
  }
}

double centroid_value(const TriMesh& m, int t, const std::vector<double>& nodal) {
  const auto& tri = m.tris[t];
  return (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
}

std::vector<char> ferro_mask(const TriMesh& m, const std::vector<double>& levelset) {
  if (levelset.size() != m.nodes.size()) throw std::invalid_argument("level set size differs from node count");
  std::vector<char> f(m.tris.size(), 0);
  for (int t = 0; t < m.num_tris(); ++t) {
    if (m.regions[t] == Region::FerroFixed) f[t] = 1;
    else if (m.regions[t] == Region::Design) f[t] = centroid_value(m, t, levelset) > 0.0 ? 1 : 0;
  }
  return f;
}

Vector assemble_rhs(const TriMesh& m, const SourceSpec& s) {
  Vector f = Vector::Zero(m.num_nodes());
  for (int t = 0; t < m.num_tris(); ++t) {
    const double jz = s.jz.empty() ? 0.0 : s.jz[t];
    const Vec2 mag = s.magnetization.empty() ? Vec2{} : s.magnetization[t];
    if (jz == 0.0 && mag == Vec2{}) continue;
    const double a = m.area(t);
    const auto g = m.basis_gradients(t);
    const Vec2 mperp{-mag.y, mag.x};
    for (int k = 0; k < 3; ++k) f[m.tris[t][k]] += a * (dot(mperp, g[k]) + jz / 3.0);
  }
  return f;
}

Vector assemble_load(const TriMesh& m, const std::function<double(Vec2)>& fn) {
  Vector f = Vector::Zero(m.num_nodes());
  for (int t = 0; t < m.num_tris(); ++t) {
    const auto& tri = m.tris[t];
    const double a = m.area(t);
    for (int k = 0; k < 3; ++k) {
      const Vec2 mid = (m.nodes[tri[k]] + m.nodes[tri[(k + 1) % 3]]) * 0.5;
      const double w = fn(mid) * a / 3.0;
      // basis k and k+1 are 1/2 at this midpoint
      f[tri[k]] += 0.5 * w;
      f[tri[(k + 1) % 3]] += 0.5 * w;
    }
  }
  return f;
}

FemSystem::FemSystem(const TriMesh& m, std::vector<char> dirichlet) : mesh_(&m), dirichlet_(std::move(dirichlet)) {
  if (dirichlet_.size() != m.nodes.size()) throw std::invalid_argument("dirichlet flag size differs from node count");
  dof_.assign(m.nodes.size(), -1);
  for (int i = 0; i < m.num_nodes(); ++i)
    if (!dirichlet_[i]) dof_[i] = num_free_++;
  const int nt = m.num_tris();
  area_.resize(nt);
  grads_.resize(nt);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    area_[t] = m.area(t);
    grads_[t] = m.basis_gradients(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int ra = dof_[m.tris[t][a]], cb = dof_[m.tris[t][b]];
        if (ra >= 0 && cb >= 0) trip.emplace_back(ra, cb, 0.0);
      }
  }
  pattern_.resize(num_free_, num_free_);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
  slots_.assign(9 * static_cast<std::size_t>(nt), -1);
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int t = 0; t < nt; ++t)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int ra = dof_[m.tris[t][a]], cb = dof_[m.tris[t][b]];
        if (ra < 0 || cb < 0) continue;
        const int* pos = std::lower_bound(inner + outer[cb], inner + outer[cb + 1], ra);
        slots_[9 * static_cast<std::size_t>(t) + 3 * a + b] = static_cast<int>(pos - inner);
      }
}

Vec2 FemSystem::gradient(int t, const std::vector<double>& u) const {
  const auto& g = grads_[t];
  const auto& tri = mesh_->tris[t];
  return g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]];
}

Vector FemSystem::restrict_to_free(const Vector& full) const {
  Vector r(num_free_);
  for (int i = 0; i < mesh_->num_nodes(); ++i)
    if (dof_[i] >= 0) r[dof_[i]] = full[i];
  return r;
}

std::vector<double> FemSystem::expand(const Vector& free, const std::vector<double>& dirichlet_values) const {
  std::vector<double> u(mesh_->nodes.size(), 0.0);
  for (int i = 0; i < mesh_->num_nodes(); ++i) {
    if (dof_[i] >= 0) u[i] = free[dof_[i]];
    else if (!dirichlet_values.empty()) u[i] = dirichlet_values[i];
  }
  return u;
}

Vec2 Coefficients::flux(int t, Vec2 grad_u) const {
  const Vec2 b = background.empty() ? Vec2{} : background[t];
  if (nonlinear.empty() || !nonlinear[t]) return curve->nu_air() * grad_u;
  if (b == Vec2{}) return curve->T(grad_u);
  return curve->T(b + grad_u) - curve->T(b);
}

Mat2 Coefficients::tangent(int t, Vec2 grad_u) const {
  if (nonlinear.empty() || !nonlinear[t]) return Mat2::diag(curve->nu_air(), curve->nu_air());
  const Vec2 b = background.empty() ? Vec2{} : background[t];
  return curve->DT(b + grad_u);
}

namespace {

struct ElementLocal {
  double r[3];
  double k[6];  // 00 01 02 11 12 22
};

constexpr int kPair[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};

inline void element_local(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u, int t,
                          bool with_jacobian, ElementLocal& out) {
  const auto& g = sys.grads(t);
  const double a = sys.area(t);
  const Vec2 gu = sys.gradient(t, u);
  const Vec2 q = c.flux(t, gu);
  for (int i = 0; i < 3; ++i) out.r[i] = a * dot(q, g[i]);
  if (!with_jacobian) return;
  const Mat2 d = c.tangent(t, gu);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) out.k[kPair[i][j]] = a * dot(g[i], d * g[j]);
}

inline void scatter(const FemSystem& sys, int t, const ElementLocal& l, Vector& r, double* values) {
  const auto& tri = sys.mesh().tris[t];
  for (int i = 0; i < 3; ++i) {
    const int di = sys.dof(tri[i]);
    if (di >= 0) r[di] += l.r[i];
  }
  if (!values) return;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int s = sys.slot(t, i, j);
      if (s >= 0) values[s] += l.k[kPair[i][j]];
    }
}

void check_inputs(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u, const Vector& load) {
  if (!c.curve) throw std::invalid_argument("coefficients without a curve");
  const auto& m = sys.mesh();
  if (u.size() != m.nodes.size() || load.size() != m.num_nodes())
    throw std::invalid_argument("field size differs from node count");
  if (!c.nonlinear.empty() && c.nonlinear.size() != m.tris.size())
    throw std::invalid_argument("material flags differ from triangle count");
  if (!c.background.empty() && c.background.size() != m.tris.size())
    throw std::invalid_argument("background field differs from triangle count");
}

Tangent assemble_impl(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u,
                      const Vector& load_full, ExecPolicy policy, bool with_jacobian) {
  check_inputs(sys, c, u, load_full);
  Tangent out;
  out.residual = -sys.restrict_to_free(load_full);
  double* values = nullptr;
  if (with_jacobian) {
    out.jacobian = sys.pattern();
    values = out.jacobian.valuePtr();
    std::fill(values, values + out.jacobian.nonZeros(), 0.0);
  }
  const int nt = sys.mesh().num_tris();
  if (policy == ExecPolicy::Serial) {
    ElementLocal l;
    for (int t = 0; t < nt; ++t) {
      element_local(sys, c, u, t, with_jacobian, l);
      scatter(sys, t, l, out.residual, values);
    }
  } else {
    std::vector<ElementLocal> locals(nt);
    for_each_index(ExecPolicy::Parallel, nt,
                   [&](std::ptrdiff_t t) { element_local(sys, c, u, static_cast<int>(t), with_jacobian, locals[t]); });
    for (int t = 0; t < nt; ++t) scatter(sys, t, locals[t], out.residual, values);
  }
  return out;
}

}  // namespace

Tangent assemble_tangent(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u,
                         const Vector& load_full, ExecPolicy policy) {
  return assemble_impl(sys, c, u, load_full, policy, true);
}

Vector assemble_residual(const FemSystem& sys, const Coefficients& c, const std::vector<double>& u,
                         const Vector& load_full, ExecPolicy policy) {
  return assemble_impl(sys, c, u, load_full, policy, false).residual;
}

LinearSolver::LinearSolver(const SparseMatrix& pattern) {
  if (pattern.rows() > 0) ldlt_.analyzePattern(pattern);
}

void LinearSolver::factorize(const SparseMatrix& a) {
  if (a.rows() == 0) return;
  ldlt_.factorize(a);
  if (ldlt_.info() != Eigen::Success) throw SolverError("sparse factorization failed (matrix not positive definite?)");
  const auto d = ldlt_.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0)) throw SolverError("singular or indefinite system matrix");
}

Vector LinearSolver::solve(const Vector& b) const {
  if (b.size() == 0) return b;
  Vector x = ldlt_.solve(b);
  if (ldlt_.info() != Eigen::Success || !x.allFinite()) throw SolverError("sparse solve failed");
  return x;
}

NewtonResult solve_quasilinear(const FemSystem& sys, const Coefficients& c, const Vector& load_full,
                               std::vector<double> initial, const NewtonOptions& opt) {
  NewtonResult res;
  if (initial.empty()) initial.assign(sys.mesh().nodes.size(), 0.0);
  res.u = std::move(initial);
  res.load_norm = sys.restrict_to_free(load_full).norm();
  const double tol = opt.tol_abs + opt.tol_rel * res.load_norm;
  Tangent cur = assemble_tangent(sys, c, res.u, load_full, opt.policy);
  double rn = cur.residual.norm();
  res.residual_history.push_back(rn);
  LinearSolver ls(sys.pattern());
  for (int it = 1; it <= opt.max_iter; ++it) {
    ls.factorize(cur.jacobian);
    const Vector delta = ls.solve(-cur.residual);
    double step = 1.0;
    bool accepted = false;
    std::vector<double> trial(res.u.size());
    Tangent next;
    double rt = 0.0;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      for (int i = 0; i < sys.mesh().num_nodes(); ++i) {
        const int d = sys.dof(i);
        trial[i] = d >= 0 ? res.u[i] + step * delta[d] : res.u[i];
      }
      next = assemble_tangent(sys, c, trial, load_full, opt.policy);
      rt = next.residual.norm();
      if (std::isfinite(rt) && (rt < rn || rt <= tol)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw SolverError(fmt::format("Newton line search failed at iteration {}, residual {:.6e}", it, rn));
    res.u = std::move(trial);
    cur = std::move(next);
    rn = rt;
    res.residual_history.push_back(rn);
    res.iterations = it;
    if (rn <= tol) {
      res.jacobian = std::move(cur.jacobian);
      return res;
    }
  }
  throw SolverError(fmt::format("Newton did not converge in {} iterations, residual {:.6e}", opt.max_iter, rn));
}

StateSolution solve_state(const FemSystem& sys, const material::ReluctivityCurve& curve,
                          const std::vector<char>& ferro, const Vector& rhs, const NewtonOptions& opt,
                          const std::vector<double>* initial) {
  Coefficients c;
  c.curve = &curve;
  c.nonlinear = ferro;
  NewtonResult nr = solve_quasilinear(sys, c, rhs, initial ? *initial : std::vector<double>{}, opt);
  StateSolution s;
  s.u = std::move(nr.u);
  s.ferro = ferro;
  s.newton_iterations = nr.iterations;
  s.residual_history = std::move(nr.residual_history);
  s.jacobian = std::move(nr.jacobian);
  return s;
}

StateSolution solve_state(const TriMesh& m, const material::ReluctivityCurve& curve,
                          const std::vector<double>& levelset, const SourceSpec& sources, const NewtonOptions& opt) {
  sources.check(m);
  const FemSystem sys(m);
  return solve_state(sys, curve, ferro_mask(m, levelset), assemble_rhs(m, sources), opt);
}

std::vector<double> solve_adjoint(const FemSystem& sys, const StateSolution& state, const Vector& adjoint_rhs_full) {
  if (state.jacobian.rows() != sys.num_free()) throw std::invalid_argument("state Jacobian does not match system");
  LinearSolver ls(sys.pattern());
  ls.factorize(state.jacobian);
  const Vector p = ls.solve(-sys.restrict_to_free(adjoint_rhs_full));
  return sys.expand(p, {});
}

std::vector<double> flux_density_magnitude(const FemSystem& sys, const std::vector<double>& u) {
  std::vector<double> b(sys.mesh().tris.size());
  for (int t = 0; t < sys.mesh().num_tris(); ++t) b[t] = norm(sys.gradient(t, u));
  return b;
}

}  // namespace magtopt::fem
