#include "magtopt/cell_problems.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "magtopt/errors.hpp"
#include "magtopt/polarization.hpp"
#include "magtopt/util.hpp"

namespace magtopt::cell {

std::string_view to_string(Case c) { return c == Case::I ? "I" : "II"; }

Case case_from_string(std::string_view s) {
  if (s == "I") return Case::I;
  if (s == "II") return Case::II;
  throw ConfigError(fmt::format("unknown case '{}'", s));
}

CellDomain::CellDomain(const mesh::DiscSpec& spec)
    : spec_(spec), mesh_(std::make_unique<mesh::TriMesh>(mesh::generate_disc_mesh(spec))) {
  if (spec.inclusion_radius != 1.0) throw ConfigError("cell problems require the unit inclusion");
  system_ = std::make_unique<fem::FemSystem>(*mesh_);
  inclusion_.resize(mesh_->tris.size());
  for (int t = 0; t < mesh_->num_tris(); ++t) inclusion_[t] = mesh_->regions[t] == mesh::Region::Inclusion;
}

std::vector<char> CellDomain::nonlinear_flags(Case c) const {
  std::vector<char> f(inclusion_.size());
  for (std::size_t t = 0; t < f.size(); ++t) f[t] = c == Case::I ? !inclusion_[t] : inclusion_[t];
  return f;
}

namespace {

fem::Coefficients cell_coefficients(const material::ReluctivityCurve& curve, Vec2 u0, Case c, const CellDomain& d) {
  fem::Coefficients k;
  k.curve = &curve;
  k.nonlinear = d.nonlinear_flags(c);
  k.background.assign(d.mesh().tris.size(), u0);
  return k;
}

// +/- sum over inclusion elements of |e| q . grad phi_i
fem::Vector inclusion_load(const CellDomain& d, Vec2 q) {
  const auto& m = d.mesh();
  fem::Vector f = fem::Vector::Zero(m.num_nodes());
  if (q == Vec2{}) return f;
  const auto& sys = d.system();
  for (int t = 0; t < m.num_tris(); ++t) {
    if (!d.in_inclusion(t)) continue;
    const auto& g = sys.grads(t);
    for (int k = 0; k < 3; ++k) f[m.tris[t][k]] += sys.area(t) * dot(q, g[k]);
  }
  return f;
}

}  // namespace

CellSolution solve_H(const material::ReluctivityCurve& curve, Vec2 u0, Case c, const CellDomain& d,
                     const fem::NewtonOptions& opt) {
  CellSolution s;
  s.domain = &d;
  s.cell_case = c;
  s.u0 = u0;
  const double t = norm(u0);
  const double sign = c == Case::I ? -1.0 : 1.0;
  const Vec2 q = (curve.nu_air() - curve.nu(t)) * u0 * sign;
  const fem::Coefficients coeff = cell_coefficients(curve, u0, c, d);
  fem::NewtonResult nr = fem::solve_quasilinear(d.system(), coeff, inclusion_load(d, q), {}, opt);
  s.values = std::move(nr.u);
  s.newton_iterations = nr.iterations;
  return s;
}

std::vector<CellSolution> solve_K_multi(const material::ReluctivityCurve& curve, Vec2 u0,
                                        const std::vector<Vec2>& v0s, Case c, const CellDomain& d,
                                        ExecPolicy policy) {
  const fem::Coefficients coeff = cell_coefficients(curve, u0, c, d);
  const auto& sys = d.system();
  const std::vector<double> zero(d.mesh().nodes.size(), 0.0);
  const fem::Tangent tan = fem::assemble_tangent(sys, coeff, zero, fem::Vector::Zero(d.mesh().num_nodes()), policy);
  fem::LinearSolver ls(sys.pattern());
  ls.factorize(tan.jacobian);
  const Mat2 contrast = Mat2::diag(curve.nu_air(), curve.nu_air()) - curve.DT(u0);
  const double sign = c == Case::I ? -1.0 : 1.0;
  std::vector<CellSolution> out;
  for (Vec2 v0 : v0s) {
    CellSolution s;
    s.domain = &d;
    s.cell_case = c;
    s.u0 = u0;
    s.v0 = v0;
    const fem::Vector f = sys.restrict_to_free(inclusion_load(d, sign * (contrast * v0)));
    s.values = sys.expand(ls.solve(f), {});
    out.push_back(std::move(s));
  }
  return out;
}

CellSolution solve_K(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Case c, const CellDomain& d,
                     ExecPolicy policy) {
  return std::move(solve_K_multi(curve, u0, {v0}, c, d, policy).front());
}

double analytic_K_case2(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Vec2 x) {
  const double t = norm(u0);
  const double nu0 = curve.nu_air();
  const double l1 = curve.lambda1(t), l2 = curve.lambda2(t);
  const double a1 = (nu0 - l2) / (l2 + nu0);
  const double a2 = (nu0 - l1) / (l1 + nu0);
  const Mat2 r = polarization::field_frame(u0);
  const Vec2 v = r.transpose() * v0;
  const Vec2 y = r.transpose() * x;
  const double r2 = dot(y, y);
  const double scale = r2 <= 1.0 ? 1.0 : 1.0 / r2;
  return scale * (a1 * v.x * y.x + a2 * v.y * y.y);
}

double j2_integral(const material::ReluctivityCurve& curve, const CellSolution& h, const CellSolution& k) {
  if (h.domain != k.domain || h.cell_case != k.cell_case) throw std::invalid_argument("H and K do not match");
  if (curve.is_linear()) return 0.0;
  const CellDomain& d = *h.domain;
  const bool outside = h.cell_case == Case::I;
  double sum = 0.0;
  for (int t = 0; t < d.mesh().num_tris(); ++t) {
    if (d.in_inclusion(t) == outside) continue;
    const Vec2 s = curve.S(h.u0, h.gradient(t));
    sum += d.system().area(t) * dot(s, k.v0 + k.gradient(t));
  }
  return sum;
}

double compute_J2(const material::ReluctivityCurve& curve, Vec2 u0, Vec2 v0, Case c, const CellDomain& d) {
  if (curve.is_linear() || u0 == Vec2{} || v0 == Vec2{}) return 0.0;
  const CellSolution h = solve_H(curve, u0, c, d);
  const CellSolution k = solve_K(curve, u0, v0, c, d);
  return j2_integral(curve, h, k);
}

std::vector<double> make_t_grid(double t_max, int samples) {
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be non-negative");
  if (t_max == 0.0) return {0.0};
  if (samples < 2) throw ConfigError("t grid needs at least 2 samples");
  std::vector<double> g(samples);
  for (int i = 0; i < samples; ++i) g[i] = t_max * i / (samples - 1);
  return g;
}

J2Table build_j2_table(const material::ReluctivityCurve& curve, Case c, const std::vector<double>& t_grid,
                       const mesh::DiscSpec& disc, ExecPolicy policy) {
  if (t_grid.empty() || t_grid.front() != 0.0) throw ConfigError("t grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("t grid must be strictly increasing");
  J2Table tab;
  tab.cell_case = c;
  tab.t = t_grid;
  tab.j2_e1.assign(t_grid.size(), 0.0);
  tab.j2_e2.assign(t_grid.size(), 0.0);
  tab.radius = disc.radius;
  tab.h0 = disc.h0;
  tab.grading = disc.grading;
  tab.curve_hash = curve.hash();
  if (curve.is_linear() || t_grid.size() == 1) return tab;
  const CellDomain domain(disc);
  fem::NewtonOptions inner;
  inner.policy = ExecPolicy::Serial;
  std::vector<std::string> errors(t_grid.size());
  for_each_index_dynamic(policy, static_cast<std::ptrdiff_t>(t_grid.size()) - 1, [&](std::ptrdiff_t idx) {
    const std::size_t i = static_cast<std::size_t>(idx) + 1;
    try {
      const Vec2 u0{t_grid[i], 0.0};
      const CellSolution h = solve_H(curve, u0, c, domain, inner);
      const auto ks = solve_K_multi(curve, u0, {{1.0, 0.0}, {0.0, 1.0}}, c, domain, ExecPolicy::Serial);
      tab.j2_e1[i] = j2_integral(curve, h, ks[0]);
      tab.j2_e2[i] = j2_integral(curve, h, ks[1]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw SolverError(fmt::format("J2 table sample {} (t = {}) failed: {}", i, t_grid[i], errors[i]));
  return tab;
}

double eval_j2(const J2Table& tab, Vec2 u0, Vec2 v0, long* clamped) {
  if (tab.t.empty()) throw std::invalid_argument("eval_j2: empty table");
  const double t = norm(u0);
  if (t == 0.0 || v0 == Vec2{}) return 0.0;
  double j1 = 0.0, j2 = 0.0;
  if (t >= tab.t.back()) {
    if (t > tab.t.back() && clamped) ++*clamped;
    j1 = tab.j2_e1.back();
    j2 = tab.j2_e2.back();
  } else {
    const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - tab.t.begin()) - 1;
    const double w = (t - tab.t[i]) / (tab.t[i + 1] - tab.t[i]);
    j1 = (1.0 - w) * tab.j2_e1[i] + w * tab.j2_e1[i + 1];
    j2 = (1.0 - w) * tab.j2_e2[i] + w * tab.j2_e2[i + 1];
  }
  return dot(u0, v0) / t * j1 + cross(u0, v0) / t * j2;
}

void write_j2_table(const J2Table& tab, const std::filesystem::path& path, std::string_view extra_comment) {
  std::string out = fmt::format("# case={} radius={} h0={} grading={} curve={}\n", to_string(tab.cell_case),
                                fmt17(tab.radius), fmt17(tab.h0), fmt17(tab.grading), tab.curve_hash);
  if (!extra_comment.empty()) out += fmt::format("# {}\n", extra_comment);
  out += "t,j2_e1,j2_e2\n";
  for (std::size_t i = 0; i < tab.t.size(); ++i)
    out += fmt::format("{},{},{}\n", fmt17(tab.t[i]), fmt17(tab.j2_e1[i]), fmt17(tab.j2_e2[i]));
  write_text_file(path, out);
}

J2Table read_j2_table(const std::filesystem::path& path) {
  const CsvTable csv = read_numeric_csv(path);
  if (csv.header != std::vector<std::string>{"t", "j2_e1", "j2_e2"})
    throw IoError(path.string() + ": expected header 't,j2_e1,j2_e2'");
  J2Table tab;
  bool have_case = false;
  for (const auto& c : csv.comments) {
    std::istringstream ss(c);
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      try {
        if (key == "case") {
          tab.cell_case = case_from_string(val);
          have_case = true;
        } else if (key == "radius") {
          tab.radius = std::stod(val);
        } else if (key == "h0") {
          tab.h0 = std::stod(val);
        } else if (key == "grading") {
          tab.grading = std::stod(val);
        } else if (key == "curve") {
          tab.curve_hash = val;
        }
      } catch (const std::exception&) {
        throw IoError(fmt::format("{}: bad metadata '{}'", path.string(), tok));
      }
    }
  }
  if (!have_case) throw IoError(path.string() + ": missing case metadata");
  for (const auto& row : csv.rows) {
    tab.t.push_back(row[0]);
    tab.j2_e1.push_back(row[1]);
    tab.j2_e2.push_back(row[2]);
  }
  if (tab.t.empty() || tab.t.front() != 0.0) throw IoError(path.string() + ": t grid must start at 0");
  for (std::size_t i = 1; i < tab.t.size(); ++i)
    if (!(tab.t[i] > tab.t[i - 1])) throw IoError(path.string() + ": t grid not strictly increasing");
  return tab;
}

}  // namespace magtopt::cell
