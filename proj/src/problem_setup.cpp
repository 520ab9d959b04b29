#include "magtopt/problem_setup.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "magtopt/errors.hpp"
#include "magtopt/util.hpp"

namespace magtopt::problem {

using mesh::Region;
using mesh::TriMesh;

double ObjectiveSpec::total_length() const {
  double s = 0.0;
  for (const auto& e : edges) s += e.length;
  return s;
}

ObjectiveSpec make_objective(const TriMesh& m, const std::function<Vec2(Vec2)>& reference_normal,
                             const std::function<double(Vec2)>& param) {
  std::map<std::pair<int, int>, std::vector<int>> owners;
  for (int t = 0; t < m.num_tris(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = m.tris[t][k], b = m.tris[t][(k + 1) % 3];
      owners[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  ObjectiveSpec spec;
  for (const auto& e : m.edges_with(mesh::BoundaryTag::Gamma0)) {
    ObjectiveEdge oe;
    oe.a = e.a;
    oe.b = e.b;
    const Vec2 pa = m.nodes[e.a], pb = m.nodes[e.b];
    const Vec2 mid = (pa + pb) * 0.5;
    oe.length = norm(pb - pa);
    if (!(oe.length > 0.0)) throw ConfigError("degenerate GAMMA0 edge");
    Vec2 n = perp(pb - pa) / oe.length;
    if (dot(n, reference_normal(mid)) < 0.0) n = -n;
    oe.tangent = perp(n);
    oe.param = param(mid);
    const auto it = owners.find({std::min(e.a, e.b), std::max(e.a, e.b)});
    if (it == owners.end() || it->second.size() != 2) throw ConfigError("GAMMA0 edge is not an interior mesh edge");
    for (int t : it->second)
      if (dot(m.centroid(t) - mid, n) > 0.0) oe.element = t;
    if (oe.element < 0) throw ConfigError("cannot choose a side for a GAMMA0 edge");
    spec.edges.push_back(oe);
  }
  spec.target.assign(spec.edges.size(), 0.0);
  check_objective(m, spec);
  return spec;
}

void check_objective(const TriMesh& m, const ObjectiveSpec& spec) {
  if (spec.target.size() != spec.edges.size()) throw ConfigError("objective target size differs from edge count");
  for (int t = 0; t < m.num_tris(); ++t) {
    if (m.regions[t] != Region::Design) continue;
    for (const auto& e : spec.edges) {
      const auto& tri = m.tris[t];
      const bool has_a = std::find(tri.begin(), tri.end(), e.a) != tri.end();
      const bool has_b = std::find(tri.begin(), tri.end(), e.b) != tri.end();
      if (has_a && has_b) throw ConfigError(fmt::format("GAMMA0 edge ({}, {}) touches design element {}", e.a, e.b, t));
    }
  }
  for (const auto& e : spec.edges)
    if (!(e.length > 0.0)) throw ConfigError("non-positive objective weight");
}

std::vector<double> normal_flux(const TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec) {
  std::vector<double> b(spec.edges.size());
  for (std::size_t i = 0; i < spec.edges.size(); ++i)
    b[i] = dot(m.gradient(spec.edges[i].element, u), spec.edges[i].tangent);
  return b;
}

double eval_objective(const TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec) {
  double j = 0.0;
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const auto& e = spec.edges[i];
    const double r = dot(m.gradient(e.element, u), e.tangent) - spec.target[i];
    j += e.length * r * r;
  }
  return j;
}

fem::Vector assemble_adjoint_rhs(const TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec) {
  fem::Vector g = fem::Vector::Zero(m.num_nodes());
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const auto& e = spec.edges[i];
    const double r = dot(m.gradient(e.element, u), e.tangent) - spec.target[i];
    const auto grads = m.basis_gradients(e.element);
    for (int k = 0; k < 3; ++k) g[m.tris[e.element][k]] += 2.0 * e.length * r * dot(grads[k], e.tangent);
  }
  return g;
}

double smoothed_plateau(double p, double p0, double p1, double w, double b_max) {
  return 0.5 * b_max * (std::tanh((p - p0) / w) - std::tanh((p - p1) / w));
}

void load_target_csv(ObjectiveSpec& spec, const std::filesystem::path& path) {
  const CsvTable t = read_numeric_csv(path);
  if (t.header != std::vector<std::string>{"theta", "b_d"}) throw ConfigError(path.string() + ": expected header 'theta,b_d'");
  if (t.rows.size() < 2) throw ConfigError(path.string() + ": need at least two rows");
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    if (!(t.rows[i][0] > t.rows[i - 1][0])) throw ConfigError(path.string() + ": theta must be strictly increasing");
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    const double p = spec.edges[i].param;
    const auto& rows = t.rows;
    if (p <= rows.front()[0]) {
      spec.target[i] = rows.front()[1];
    } else if (p >= rows.back()[0]) {
      spec.target[i] = rows.back()[1];
    } else {
      const auto it = std::upper_bound(rows.begin(), rows.end(), p,
                                       [](double v, const std::vector<double>& r) { return v < r[0]; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (p - lo[0]) / (hi[0] - lo[0]);
      spec.target[i] = (1.0 - w) * lo[1] + w * hi[1];
    }
  }
}

std::string_view to_string(BenchmarkKind k) { return k == BenchmarkKind::Square ? "square" : "mini_motor"; }

BenchmarkKind benchmark_from_string(std::string_view s) {
  if (s == "square") return BenchmarkKind::Square;
  if (s == "mini_motor") return BenchmarkKind::MiniMotor;
  throw ConfigError(fmt::format("unknown problem '{}'", s));
}

BenchmarkParams default_params(BenchmarkKind k) {
  BenchmarkParams p;
  if (k == BenchmarkKind::MiniMotor) {
    const mesh::MotorLayout l;
    p.target_p0 = l.magnet_th0;
    p.target_p1 = l.magnet_th1;
    p.target_width = 0.08;
  }
  return p;
}

BenchmarkProblem build_benchmark_problem(BenchmarkKind kind, int resolution, const BenchmarkParams& prm) {
  BenchmarkProblem bp;
  bp.kind = kind;
  if (kind == BenchmarkKind::Square) {
    bp.mesh = mesh::generate_square_benchmark(resolution);
    bp.objective = make_objective(
        bp.mesh, [](Vec2) { return Vec2{0.0, 1.0}; }, [](Vec2 mid) { return mid.x; });
  } else {
    bp.mesh = mesh::generate_mini_motor(resolution);
    bp.objective = make_objective(
        bp.mesh, [](Vec2 mid) { return mid / norm(mid); },
        [](Vec2 mid) {
          const double a = std::atan2(mid.y, mid.x);
          return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
        });
  }
  for (std::size_t i = 0; i < bp.objective.edges.size(); ++i)
    bp.objective.target[i] =
        smoothed_plateau(bp.objective.edges[i].param, prm.target_p0, prm.target_p1, prm.target_width, prm.b_max);
  bp.sources = fem::SourceSpec::zeros(bp.mesh);
  bp.sources.set_current(bp.mesh, prm.coil_current);
  const double mag = prm.magnetization;
  if (kind == BenchmarkKind::Square)
    bp.sources.set_magnetization(bp.mesh, [mag](Vec2) { return Vec2{0.0, mag}; });
  else
    bp.sources.set_magnetization(bp.mesh, [mag](Vec2 c) { return c * (mag / norm(c)); });
  bp.sources.check(bp.mesh);
  return bp;
}

}  // namespace magtopt::problem
