#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <random>

#include "magtopt/cli.hpp"
#include "magtopt/polarization.hpp"

namespace magtopt::cli {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec2 random_vec(Rng& rng, double r_max) {
  const double r = uniform(rng, 0.05 * r_max, r_max), a = uniform(rng, 0.0, 2.0 * polarization::kPi);
  return {r * std::cos(a), r * std::sin(a)};
}

Mat2 random_contrast(Rng& rng) {
  const bool up = uniform(rng, 0.0, 1.0) < 0.5;
  const double d1 = up ? uniform(rng, 1.0, 50.0) : uniform(rng, 0.01, 1.0);
  const double d2 = up ? uniform(rng, 1.0, 50.0) : uniform(rng, 0.01, 1.0);
  const Mat2 r = Mat2::rotation(uniform(rng, 0.0, polarization::kPi));
  return r * Mat2::diag(d1, d2) * r.transpose();
}

double rel(const Mat2& a, const Mat2& b) { return max_abs_diff(a, b) / std::max(b.max_abs(), 1e-300); }

bool check_disk(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Mat2 at = random_contrast(rng);
    const Mat2 ref = 2.0 * polarization::kPi * ((at + Mat2::identity()).inverse() * (at - Mat2::identity()));
    worst = std::max(worst, rel(polarization::general(Mat2::identity(), at), ref));
  }
  return worst < 1e-12;
}

bool check_case_forms(Rng& rng, const material::ReluctivityCurve& curve) {
  const double nu0 = curve.nu_air();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec2 u0 = random_vec(rng, 4.0);
    const double t = norm(u0);
    const Mat2 dt = curve.DT(u0);
    const Mat2 p1 = polarization::polarization_case1(curve.lambda1(t), curve.lambda2(t), nu0, u0);
    const Mat2 p2 = polarization::polarization_case2(curve.lambda1(t), curve.lambda2(t), nu0, u0);
    worst = std::max(worst, rel(polarization::general(dt, Mat2::identity() * nu0), p1));
    worst = std::max(worst, rel(polarization::general(Mat2::identity() * nu0, dt), p2));
  }
  return worst < 1e-10;
}

bool check_dt(Rng& rng, const material::ReluctivityCurve& curve) {
  for (int i = 0; i < 20; ++i) {
    const Vec2 w = random_vec(rng, 3.0), v = random_vec(rng, 1.0);
    const double h = 1e-5;
    const Vec2 fd = (curve.T(w + v * h) - curve.T(w - v * h)) * (0.5 / h);
    const Vec2 an = curve.DT(w) * v;
    if (norm(fd - an) > 1e-5 * std::max(norm(an), curve.nu_min())) return false;
  }
  return true;
}

bool check_slerp(Rng& rng) {
  const auto m = mesh::generate_unit_square(12, mesh::Region::Design);
  const opt::DesignSpace space(m);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> a(m.nodes.size()), b(m.nodes.size());
    for (auto& x : a) x = uniform(rng, -1.0, 1.0);
    for (auto& x : b) x = uniform(rng, -1.0, 1.0);
    a = space.normalized(a);
    b = space.normalized(b);
    const double theta = std::acos(std::clamp(space.inner(a, b), -1.0, 1.0));
    const auto c = opt::spherical_update(a, b, theta, uniform(rng, 0.0, 1.0));
    worst = std::max(worst, std::abs(space.norm(c) - 1.0));
  }
  return worst < 1e-10;
}

bool check_jacobian(Rng& rng, const material::ReluctivityCurve& curve) {
  const auto m = mesh::generate_unit_square(8, mesh::Region::FerroFixed);
  const fem::FemSystem sys(m);
  fem::Coefficients c;
  c.curve = &curve;
  c.nonlinear.assign(m.tris.size(), 1);
  std::vector<double> u(m.nodes.size(), 0.0), eta(m.nodes.size(), 0.0);
  for (int v = 0; v < m.num_nodes(); ++v)
    if (!sys.dirichlet()[v]) {
      u[v] = uniform(rng, -0.2, 0.2);
      eta[v] = uniform(rng, -1.0, 1.0);
    }
  const fem::Vector load = fem::Vector::Zero(m.num_nodes());
  const auto tan = fem::assemble_tangent(sys, c, u, load, ExecPolicy::Serial);
  const double h = 1e-6;
  auto shifted = [&](double s) {
    auto w = u;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += s * eta[i];
    return fem::assemble_residual(sys, c, w, load, ExecPolicy::Serial);
  };
  const fem::Vector fd = (shifted(h) - shifted(-h)) / (2.0 * h);
  const fem::Vector an = tan.jacobian * sys.restrict_to_free(Eigen::Map<const fem::Vector>(eta.data(), eta.size()));
  return (fd - an).norm() <= 1e-5 * an.norm();
}

bool check_objective_gradient(Rng& rng) {
  const auto bp = problem::build_benchmark_problem(problem::BenchmarkKind::Square, 16, {});
  std::vector<double> u(bp.mesh.nodes.size()), eta(bp.mesh.nodes.size());
  for (auto& x : u) x = uniform(rng, -0.05, 0.05);
  for (auto& x : eta) x = uniform(rng, -0.05, 0.05);
  const auto g = problem::assemble_adjoint_rhs(bp.mesh, u, bp.objective);
  double an = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) an += g[static_cast<Eigen::Index>(i)] * eta[i];
  const double h = 1e-6;
  auto j = [&](double s) {
    auto w = u;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += s * eta[i];
    return problem::eval_objective(bp.mesh, w, bp.objective);
  };
  const double fd = (j(h) - j(-h)) / (2.0 * h);
  return std::abs(fd - an) <= 1e-5 * std::max(std::abs(an), 1e-12);
}

bool check_parallel_assembly(const material::ReluctivityCurve& curve) {
  const auto bp = problem::build_benchmark_problem(problem::BenchmarkKind::Square, 16, {});
  const fem::FemSystem sys(bp.mesh);
  fem::Coefficients c;
  c.curve = &curve;
  c.nonlinear = fem::ferro_mask(bp.mesh, std::vector<double>(bp.mesh.nodes.size(), 1.0));
  std::vector<double> u(bp.mesh.nodes.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.01 * std::sin(0.37 * static_cast<double>(i));
  const auto load = fem::assemble_rhs(bp.mesh, bp.sources);
  const auto a = fem::assemble_tangent(sys, c, u, load, ExecPolicy::Serial);
  const auto b = fem::assemble_tangent(sys, c, u, load, ExecPolicy::Parallel);
  if (a.residual != b.residual) return false;
  const fem::SparseMatrix d = a.jacobian - b.jacobian;
  for (int k = 0; k < d.outerSize(); ++k)
    for (fem::SparseMatrix::InnerIterator it(d, k); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

}  // namespace

int run_selftest(std::uint64_t seed, std::ostream& out) {
  Rng rng(seed);
  const auto curve = material::ReluctivityCurve::marrocco();
  const std::vector<std::pair<const char*, std::function<bool()>>> checks{
      {"polarization_disk_identity", [&] { return check_disk(rng); }},
      {"polarization_case_closed_forms", [&] { return check_case_forms(rng, curve); }},
      {"material_dt_central_difference", [&] { return check_dt(rng, curve); }},
      {"spherical_update_unit_norm", [&] { return check_slerp(rng); }},
      {"fem_jacobian_central_difference", [&] { return check_jacobian(rng, curve); }},
      {"objective_gradient_central_difference", [&] { return check_objective_gradient(rng); }},
      {"parallel_assembly_matches_serial", [&] { return check_parallel_assembly(curve); }},
  };
  int failures = 0;
  out << fmt::format("selftest seed = {}\n", seed);
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      out << fmt::format("  error in {}: {}\n", name, e.what());
    }
    out << fmt::format("{} {}\n", ok ? "PASS" : "FAIL", name);
    failures += ok ? 0 : 1;
  }
  return failures;
}

}  // namespace magtopt::cli
