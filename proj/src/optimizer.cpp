#include "magtopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "magtopt/errors.hpp"

namespace magtopt::opt {

using mesh::Region;

DesignSpace::DesignSpace(const mesh::TriMesh& m) : mesh_(&m) {
  std::vector<char> is_node(m.nodes.size(), 0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int t = 0; t < m.num_tris(); ++t) {
    if (m.regions[t] != Region::Design) continue;
    elements_.push_back(t);
    const double a = m.area(t);
    area_ += a;
    for (int i = 0; i < 3; ++i) {
      is_node[m.tris[t][i]] = 1;
      for (int j = 0; j < 3; ++j) trip.emplace_back(m.tris[t][i], m.tris[t][j], a / 12.0 * (i == j ? 2.0 : 1.0));
    }
  }
  if (elements_.empty()) throw ConfigError("mesh has no DESIGN elements");
  for (int v = 0; v < m.num_nodes(); ++v)
    if (is_node[v]) nodes_.push_back(v);
  mass_.resize(m.num_nodes(), m.num_nodes());
  mass_.setFromTriplets(trip.begin(), trip.end());
}

double DesignSpace::inner(const std::vector<double>& a, const std::vector<double>& b) const {
  if (a.size() != mesh_->nodes.size() || b.size() != mesh_->nodes.size())
    throw std::invalid_argument("level set does not match the mesh");
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXd> vb(b.data(), static_cast<Eigen::Index>(b.size()));
  double s = 0.0;
  for (int k = 0; k < mass_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mass_, k); it; ++it) {
      const auto i = it.row(), j = it.col();
      if (i < j) s += it.value() * (va[i] * vb[j] + va[j] * vb[i]);
      else if (i == j) s += it.value() * (va[i] * vb[i]);
    }
  return s;
}

double DesignSpace::norm(const std::vector<double>& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

std::vector<double> DesignSpace::normalized(const std::vector<double>& a) const {
  const double n = norm(a);
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalise a zero level set");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / n;
  return out;
}

double DesignSpace::ferro_fraction(const std::vector<double>& psi) const {
  double f = 0.0;
  for (int t : elements_)
    if (fem::centroid_value(*mesh_, t, psi) > 0.0) f += mesh_->area(t);
  return f / area_;
}

double l2_inner(const mesh::TriMesh& m, const std::vector<double>& a, const std::vector<double>& b) {
  return DesignSpace(m).inner(a, b);
}

std::vector<double> spherical_update(const std::vector<double>& psi, const std::vector<double>& g, double theta,
                                     double kappa) {
  if (psi.size() != g.size()) throw std::invalid_argument("spherical_update: size mismatch");
  std::vector<double> out(psi.size());
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-14) {
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = (1.0 - kappa) * psi[i] + kappa * g[i];
    return out;
  }
  const double a = std::sin((1.0 - kappa) * theta), b = std::sin(kappa * theta);
  for (std::size_t i = 0; i < psi.size(); ++i) out[i] = (a * psi[i] + b * g[i]) / s;
  return out;
}

std::vector<double> initial_levelset(const DesignSpace& space, double offset) {
  const auto& m = space.mesh();
  Vec2 lo = m.nodes[space.design_nodes().front()], hi = lo;
  for (int v : space.design_nodes()) {
    lo = {std::min(lo.x, m.nodes[v].x), std::min(lo.y, m.nodes[v].y)};
    hi = {std::max(hi.x, m.nodes[v].x), std::max(hi.y, m.nodes[v].y)};
  }
  const Vec2 c = (lo + hi) * 0.5;
  const double lx = hi.x - lo.x, ly = hi.y - lo.y;
  std::vector<double> psi(m.nodes.size(), 0.0);
  for (int v : space.design_nodes()) {
    const Vec2 p = m.nodes[v];
    psi[v] = offset + std::cos(std::numbers::pi * (p.x - c.x) / lx) * std::cos(std::numbers::pi * (p.y - c.y) / ly);
  }
  return space.normalized(psi);
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Converged: return "converged";
    case Status::Stalled: return "stalled";
    case Status::MaxIter: return "max_iter";
  }
  return "unknown";
}

TopologyProblem::TopologyProblem(const problem::BenchmarkProblem& bp, const material::ReluctivityCurve& curve,
                                 topo::J2Tables tables, fem::NewtonOptions newton)
    : bp_(&bp),
      curve_(&curve),
      tables_(tables),
      newton_(newton),
      system_(bp.mesh),
      rhs_(fem::assemble_rhs(bp.mesh, bp.sources)),
      space_(bp.mesh) {
  bp.sources.check(bp.mesh);
  problem::check_objective(bp.mesh, bp.objective);
}

const fem::StateSolution& TopologyProblem::state(const std::vector<double>& psi) {
  // The state depends on psi only through the material mask.
  auto ferro = fem::ferro_mask(bp_->mesh, psi);
  if (cached_state_ && ferro == cached_state_->ferro) return *cached_state_;
  cached_state_ = fem::solve_state(system_, *curve_, ferro, rhs_, newton_, warm_start_.empty() ? nullptr : &warm_start_);
  ++solves_;
  return *cached_state_;
}

double TopologyProblem::objective(const std::vector<double>& psi) {
  return problem::eval_objective(bp_->mesh, state(psi).u, bp_->objective);
}

std::vector<double> TopologyProblem::adjoint(const std::vector<double>& psi) {
  const auto& s = state(psi);
  return fem::solve_adjoint(system_, s, problem::assemble_adjoint_rhs(bp_->mesh, s.u, bp_->objective));
}

topo::TopoDerivField TopologyProblem::derivative_field(const std::vector<double>& psi) {
  const auto p = adjoint(psi);
  const auto& s = state(psi);
  warm_start_ = s.u;
  auto f = topo::assemble_generalized_td(bp_->mesh, *curve_, s.ferro, s.u, p, tables_);
  max_abs_j2_ = std::max(max_abs_j2_, f.max_abs_j2());
  clamped_ += f.clamped_lookups;
  return f;
}

std::vector<double> TopologyProblem::sensitivity(const std::vector<double>& psi) {
  return derivative_field(psi).nodal;
}

bool step(OptState& state, const DesignSpace& space, const std::vector<double>& g_unit, double theta,
          double current_J, const std::function<double(const std::vector<double>&)>& objective,
          const OptimizerConfig& cfg, IterationRecord& record) {
  record = {};
  for (double kappa = cfg.kappa_start; kappa >= cfg.kappa_min; kappa *= 0.5) {
    const auto trial = spherical_update(state.psi, g_unit, theta, kappa);
    ++record.trials;
    const double j = objective(trial);
    if (j < current_J) {
      state.psi = space.normalized(trial);
      ++state.k;
      record.k = state.k;
      record.J = j;
      record.kappa = kappa;
      return true;
    }
  }
  return false;
}

OptState run(DesignProblem& problem, std::vector<double> psi0, const OptimizerConfig& cfg,
             const IterationCallback& on_iteration) {
  if (!(cfg.kappa_start > 0.0 && cfg.kappa_start <= 1.0)) throw ConfigError("kappa_start must lie in (0, 1]");
  if (!(cfg.kappa_min > 0.0)) throw ConfigError("kappa_min must be positive");
  if (!(cfg.theta_tol_deg > 0.0)) throw ConfigError("theta_tol must be positive");
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be non-negative");
  const DesignSpace& space = problem.space();
  OptState state;
  state.psi = space.normalized(psi0);
  IterationRecord rec;
  rec.J = problem.objective(state.psi);
  rec.trials = 1;
  while (true) {
    const auto G = problem.sensitivity(state.psi);
    const double gn = space.norm(G);
    double theta = 0.0;
    std::vector<double> g;
    if (gn > 0.0) {
      g.resize(G.size());
      for (std::size_t i = 0; i < G.size(); ++i) g[i] = G[i] / gn;
      theta = std::acos(std::clamp(space.inner(state.psi, g), -1.0, 1.0));
    }
    rec.theta_deg = theta * 180.0 / std::numbers::pi;
    rec.ferro_fraction = space.ferro_fraction(state.psi);
    if (std::abs(space.norm(state.psi) - 1.0) > 1e-10) throw std::logic_error("level set left the unit sphere");
    state.history.push_back(rec);
    if (on_iteration) on_iteration(state, rec);
    if (gn == 0.0 || rec.theta_deg < cfg.theta_tol_deg) {
      state.status = Status::Converged;
      break;
    }
    if (state.k >= cfg.max_iter) {
      state.status = Status::MaxIter;
      break;
    }
    const double current = rec.J;
    IterationRecord next;
    if (!step(state, space, g, theta, current, [&](const std::vector<double>& p) { return problem.objective(p); }, cfg,
              next)) {
      state.status = Status::Stalled;
      break;
    }
    rec = next;
  }
  return state;
}

}  // namespace magtopt::opt
