#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "magtopt/errors.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/problem_setup.hpp"

using namespace magtopt;
using material::ReluctivityCurve;

namespace {

constexpr double kPi = std::numbers::pi;

// Edge-midpoint rule, exact for quadratics.
template <class F>
double integrate(const mesh::TriMesh& m, int t, F&& f) {
  const auto& tri = m.tris[t];
  const Vec2 a = m.nodes[tri[0]], b = m.nodes[tri[1]], c = m.nodes[tri[2]];
  return m.area(t) / 3.0 * (f((a + b) * 0.5) + f((b + c) * 0.5) + f((c + a) * 0.5));
}

struct Manufactured {
  double amp;
  double u(Vec2 p) const { return amp * std::sin(kPi * p.x) * std::sin(kPi * p.y); }
  Vec2 grad(Vec2 p) const {
    return {amp * kPi * std::cos(kPi * p.x) * std::sin(kPi * p.y), amp * kPi * std::sin(kPi * p.x) * std::cos(kPi * p.y)};
  }
};

// -div T(grad u*) by central differences of the exact flux.
double source(const ReluctivityCurve& c, const Manufactured& ms, Vec2 p) {
  const double h = 1e-5;
  const Vec2 ex{h, 0.0}, ey{0.0, h};
  const double dx = (c.T(ms.grad(p + ex)).x - c.T(ms.grad(p - ex)).x) / (2 * h);
  const double dy = (c.T(ms.grad(p + ey)).y - c.T(ms.grad(p - ey)).y) / (2 * h);
  return -(dx + dy);
}

double h1_error(const ReluctivityCurve& curve, const Manufactured& ms, int n) {
  const auto m = mesh::generate_unit_square(n, mesh::Region::FerroFixed);
  const fem::FemSystem sys(m);
  fem::Coefficients c;
  c.curve = &curve;
  c.nonlinear.assign(m.tris.size(), 1);
  const auto load = fem::assemble_load(m, [&](Vec2 p) { return source(curve, ms, p); });
  const auto res = fem::solve_quasilinear(sys, c, load, {});
  double e2 = 0.0;
  for (int t = 0; t < m.num_tris(); ++t) {
    const Vec2 gh = sys.gradient(t, res.u);
    e2 += integrate(m, t, [&](Vec2 p) {
      const Vec2 d = gh - ms.grad(p);
      return dot(d, d);
    });
  }
  return std::sqrt(e2);
}

double psi_energy(const ReluctivityCurve& c, double s) {
  if (s == 0.0) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double r) { return c.nu(r) * r; }, 0.0, s,
                                                                        10, 1e-14);
}

struct Fixture {
  problem::BenchmarkProblem bp = problem::build_benchmark_problem(problem::BenchmarkKind::Square, 16, {});
  ReluctivityCurve curve = ReluctivityCurve::marrocco();
  std::vector<double> psi = std::vector<double>(bp.mesh.nodes.size(), 1.0);
};

}  // namespace

TEST(Fem, ManufacturedLinearConvergesFirstOrderInH1) {
  const auto lin = ReluctivityCurve::linear(1000.0);
  const Manufactured ms{1.0};
  std::vector<double> err;
  for (int n : {16, 32, 64}) err.push_back(h1_error(lin, ms, n));
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double slope = std::log2(err[i - 1] / err[i]);
    EXPECT_GE(slope, 0.9);
    EXPECT_LE(slope, 1.1);
  }
}

TEST(Fem, ManufacturedNonlinearConverges) {
  const auto curve = ReluctivityCurve::marrocco();
  const Manufactured ms{1.0};  // |grad u*| up to pi T, into the curved part of the law
  const double e1 = h1_error(curve, ms, 16), e2 = h1_error(curve, ms, 32);
  EXPECT_GE(std::log2(e1 / e2), 0.9);
}

TEST(Fem, ResidualIsEnergyGradient) {
  Fixture f;
  const fem::FemSystem sys(f.bp.mesh);
  fem::Coefficients c;
  c.curve = &f.curve;
  c.nonlinear = fem::ferro_mask(f.bp.mesh, f.psi);
  const auto load = fem::assemble_rhs(f.bp.mesh, f.bp.sources);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(-0.05, 0.05);
  std::vector<double> u(f.bp.mesh.nodes.size(), 0.0), eta(u.size(), 0.0);
  for (int v = 0; v < f.bp.mesh.num_nodes(); ++v)
    if (!sys.dirichlet()[v]) {
      u[v] = ud(rng);
      eta[v] = ud(rng);
    }
  auto energy = [&](double step) {
    double e = 0.0;
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] + step * eta[i];
    for (int t = 0; t < f.bp.mesh.num_tris(); ++t) {
      const double s = norm(sys.gradient(t, w));
      e += sys.area(t) * (c.nonlinear[t] ? psi_energy(f.curve, s) : 0.5 * f.curve.nu_air() * s * s);
    }
    for (std::size_t i = 0; i < w.size(); ++i) e -= load[static_cast<Eigen::Index>(i)] * w[i];
    return e;
  };
  const double h = 1e-4;
  const double fd = (energy(h) - energy(-h)) / (2 * h);
  const auto r = fem::assemble_residual(sys, c, u, load, ExecPolicy::Serial);
  const auto eta_free = sys.restrict_to_free(Eigen::Map<const fem::Vector>(eta.data(), eta.size()));
  const double an = r.dot(eta_free);
  EXPECT_NEAR(fd, an, 1e-6 * std::abs(an));
}

TEST(Fem, JacobianIsSymmetricAndMatchesResidualDifferences) {
  Fixture f;
  const fem::FemSystem sys(f.bp.mesh);
  fem::Coefficients c;
  c.curve = &f.curve;
  c.nonlinear = fem::ferro_mask(f.bp.mesh, f.psi);
  const auto load = fem::assemble_rhs(f.bp.mesh, f.bp.sources);
  const auto st = fem::solve_state(sys, f.curve, c.nonlinear, load);
  const auto tan = fem::assemble_tangent(sys, c, st.u, load);
  const fem::SparseMatrix asym = tan.jacobian - fem::SparseMatrix(tan.jacobian.transpose());
  EXPECT_LT(asym.norm(), 1e-12 * tan.jacobian.norm());
  std::vector<double> eta(st.u.size(), 0.0);
  for (int v = 0; v < f.bp.mesh.num_nodes(); ++v)
    if (!sys.dirichlet()[v]) eta[v] = std::sin(1.0 + v);
  auto shifted = [&](double s) {
    auto w = st.u;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += s * eta[i];
    return fem::assemble_residual(sys, c, w, load);
  };
  const double h = 1e-7;
  const fem::Vector fd = (shifted(h) - shifted(-h)) / (2 * h);
  const fem::Vector an = tan.jacobian * sys.restrict_to_free(Eigen::Map<const fem::Vector>(eta.data(), eta.size()));
  EXPECT_LT((fd - an).norm(), 1e-6 * an.norm());
}

TEST(Fem, ZeroSourcesGiveZeroStateInOneIteration) {
  const auto m = mesh::generate_square_benchmark(16);
  const auto s = fem::solve_state(m, ReluctivityCurve::marrocco(), std::vector<double>(m.nodes.size(), 1.0),
                                  fem::SourceSpec::zeros(m));
  EXPECT_EQ(s.newton_iterations, 1);
  for (double v : s.u) EXPECT_EQ(v, 0.0);
}

TEST(Fem, LinearStubConvergesInOneIteration) {
  Fixture f;
  const auto s = fem::solve_state(f.bp.mesh, ReluctivityCurve::linear(3000.0), f.psi, f.bp.sources);
  EXPECT_EQ(s.newton_iterations, 1);
}

TEST(Fem, NewtonResidualDecreasesMonotonically) {
  Fixture f;
  const auto s = fem::solve_state(f.bp.mesh, f.curve, f.psi, f.bp.sources);
  ASSERT_GE(s.residual_history.size(), 2u);
  for (std::size_t i = 1; i < s.residual_history.size(); ++i)
    EXPECT_LT(s.residual_history[i], s.residual_history[i - 1]);
}

TEST(Fem, NewtonFailureIsSolverError) {
  Fixture f;
  fem::NewtonOptions opt;
  opt.max_iter = 1;
  opt.tol_abs = 0.0;
  opt.tol_rel = 1e-15;
  EXPECT_THROW(fem::solve_state(f.bp.mesh, f.curve, f.psi, f.bp.sources, opt), SolverError);
}

TEST(Fem, ParallelMatchesSerialBitwise) {
  Fixture f;
  const fem::FemSystem sys(f.bp.mesh);
  const auto rhs = fem::assemble_rhs(f.bp.mesh, f.bp.sources);
  const auto ferro = fem::ferro_mask(f.bp.mesh, f.psi);
  fem::NewtonOptions ser, par;
  ser.policy = ExecPolicy::Serial;
  par.policy = ExecPolicy::Parallel;
  const auto a = fem::solve_state(sys, f.curve, ferro, rhs, ser);
  const auto b = fem::solve_state(sys, f.curve, ferro, rhs, par);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.residual_history, b.residual_history);
}

TEST(Fem, AdjointOfZeroIsZeroAndLinearSelfAdjoint) {
  Fixture f;
  const auto lin = ReluctivityCurve::linear(3000.0);
  const fem::FemSystem sys(f.bp.mesh);
  const auto rhs = fem::assemble_rhs(f.bp.mesh, f.bp.sources);
  const auto st = fem::solve_state(sys, lin, fem::ferro_mask(f.bp.mesh, f.psi), rhs);
  const auto p0 = fem::solve_adjoint(sys, st, fem::Vector::Zero(rhs.size()));
  for (double v : p0) EXPECT_EQ(v, 0.0);
  // DT p = -g with g = -F gives p = u
  const auto p = fem::solve_adjoint(sys, st, -rhs);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    diff = std::max(diff, std::abs(p[i] - st.u[i]));
    scale = std::max(scale, std::abs(st.u[i]));
  }
  EXPECT_LT(diff, 1e-10 * scale);
}

TEST(Fem, LoadVectorsSumCorrectly) {
  const auto m = mesh::generate_square_benchmark(16);
  auto s = fem::SourceSpec::zeros(m);
  s.set_current(m, 2.0);
  s.set_magnetization(m, [](Vec2) { return Vec2{0.0, 5.0}; });
  s.check(m);
  const auto f = fem::assemble_rhs(m, s);
  EXPECT_NEAR(f.sum(), 2.0 * m.region_area(mesh::Region::Coil), 1e-12);
  const auto g = fem::assemble_load(m, [](Vec2) { return 1.0; });
  EXPECT_NEAR(g.sum(), 1.0, 1e-12);
  auto bad = fem::SourceSpec::zeros(m);
  bad.jz[0] = 1.0;
  EXPECT_THROW(bad.check(m), ConfigError);
}

TEST(Fem, MaterialMaskBreaksTiesTowardAir) {
  const auto m = mesh::generate_square_benchmark(16);
  const auto mask = fem::ferro_mask(m, std::vector<double>(m.nodes.size(), 0.0));
  for (int t = 0; t < m.num_tris(); ++t) EXPECT_EQ(mask[t] != 0, m.regions[t] == mesh::Region::FerroFixed);
}
