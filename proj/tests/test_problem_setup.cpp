#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "magtopt/errors.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/material.hpp"
#include "magtopt/problem_setup.hpp"

using namespace magtopt;
using problem::BenchmarkKind;

namespace {

const problem::BenchmarkProblem& square(int n) {
  static const auto bp16 = problem::build_benchmark_problem(BenchmarkKind::Square, 16, {});
  static const auto bp32 = problem::build_benchmark_problem(BenchmarkKind::Square, 32, {});
  return n == 16 ? bp16 : bp32;
}

std::vector<double> random_nodal(std::size_t n, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(ProblemSetup, SquareObjectiveEdges) {
  const auto& bp = square(32);
  const auto& obj = bp.objective;
  ASSERT_FALSE(obj.edges.empty());
  EXPECT_EQ(obj.target.size(), obj.edges.size());
  // the tracking segment spans x in [0.2, 0.8] snapped to the grid
  EXPECT_NEAR(obj.total_length(), 0.6, 2.0 / 32);
  for (const auto& e : obj.edges) {
    EXPECT_NEAR(std::abs(e.tangent.x), 1.0, 1e-12);
    EXPECT_NEAR(e.length, norm(bp.mesh.nodes[e.a] - bp.mesh.nodes[e.b]), 1e-14);
    EXPECT_GE(e.element, 0);
    EXPECT_EQ(bp.mesh.regions[e.element], mesh::Region::AirGap);
  }
  EXPECT_NO_THROW(problem::check_objective(bp.mesh, obj));
}

TEST(ProblemSetup, MotorObjectiveIsOnACircle) {
  const auto bp = problem::build_benchmark_problem(BenchmarkKind::MiniMotor, 16,
                                                   problem::default_params(BenchmarkKind::MiniMotor));
  ASSERT_FALSE(bp.objective.edges.empty());
  for (const auto& e : bp.objective.edges) {
    EXPECT_GE(e.param, 0.0);
    EXPECT_LT(e.param, 2.0 * std::numbers::pi);
  }
  EXPECT_NO_THROW(problem::check_objective(bp.mesh, bp.objective));
}

TEST(ProblemSetup, ObjectiveIsZeroOnTarget) {
  // a field u = b x has grad u . tau = b tau_x on every horizontal edge
  const auto& bp = square(16);
  auto obj = bp.objective;
  std::vector<double> u(bp.mesh.nodes.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.3 * bp.mesh.nodes[i].x;
  const auto flux = problem::normal_flux(bp.mesh, u, obj);
  for (std::size_t i = 0; i < obj.edges.size(); ++i) obj.target[i] = flux[i];
  EXPECT_NEAR(problem::eval_objective(bp.mesh, u, obj), 0.0, 1e-28);
  for (auto& t : obj.target) t += 0.1;
  EXPECT_NEAR(problem::eval_objective(bp.mesh, u, obj), 0.01 * obj.total_length(), 1e-14);
}

TEST(ProblemSetup, AdjointRhsMatchesCentralDifference) {
  const auto& bp = square(16);
  std::mt19937_64 rng(5);
  for (int dir = 0; dir < 5; ++dir) {
    const auto u = random_nodal(bp.mesh.nodes.size(), rng, 0.05);
    const auto eta = random_nodal(bp.mesh.nodes.size(), rng, 0.05);
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
    EXPECT_NEAR(fd, an, 1e-5 * std::abs(an)) << "direction " << dir;
  }
}

TEST(ProblemSetup, AdjointGivesDerivativeWithRespectToLoad) {
  // J(u(F + e f)): dJ/de = -p . f when K p = -G' and K du = f.
  const auto& bp = square(16);
  const auto curve = material::ReluctivityCurve::marrocco();
  const fem::FemSystem sys(bp.mesh);
  const auto ferro = fem::ferro_mask(bp.mesh, std::vector<double>(bp.mesh.nodes.size(), 1.0));
  const fem::Vector rhs = fem::assemble_rhs(bp.mesh, bp.sources);
  fem::NewtonOptions opt;
  opt.tol_abs = 0.0;
  opt.tol_rel = 1e-14;
  const auto s0 = fem::solve_state(sys, curve, ferro, rhs, opt);
  const auto p = fem::solve_adjoint(sys, s0, problem::assemble_adjoint_rhs(bp.mesh, s0.u, bp.objective));
  std::mt19937_64 rng(6);
  for (int dir = 0; dir < 3; ++dir) {
    fem::Vector f = fem::Vector::Zero(rhs.size());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (Eigen::Index i = 0; i < f.size(); ++i)
      if (!sys.dirichlet()[i]) f[i] = d(rng);
    double an = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) an -= p[i] * f[i];
    const double h = 1e-6 * rhs.norm() / f.norm();
    auto j = [&](double e) {
      const auto s = fem::solve_state(sys, curve, ferro, rhs + e * f, opt, &s0.u);
      return problem::eval_objective(bp.mesh, s.u, bp.objective);
    };
    const double fd = (j(h) - j(-h)) / (2.0 * h);
    EXPECT_NEAR(fd, an, 1e-4 * std::abs(an)) << "direction " << dir;
  }
}

TEST(ProblemSetup, SmoothedPlateau) {
  EXPECT_NEAR(problem::smoothed_plateau(0.375, 0.25, 0.5, 0.01, 1.0), 1.0, 1e-9);
  EXPECT_NEAR(problem::smoothed_plateau(0.9, 0.25, 0.5, 0.01, 1.0), 0.0, 1e-9);
  EXPECT_NEAR(problem::smoothed_plateau(0.25, 0.25, 0.5, 0.03, 2.0), 1.0, 1e-3);
}

TEST(ProblemSetup, SquareTargetFollowsPlateau) {
  const auto& bp = square(32);
  const problem::BenchmarkParams prm;
  for (std::size_t i = 0; i < bp.objective.edges.size(); ++i)
    EXPECT_DOUBLE_EQ(bp.objective.target[i],
                     problem::smoothed_plateau(bp.objective.edges[i].param, prm.target_p0, prm.target_p1,
                                               prm.target_width, prm.b_max));
}

TEST(ProblemSetup, TargetCsvInterpolatesAndClamps) {
  auto obj = square(32).objective;
  const auto path = std::filesystem::temp_directory_path() / "magtopt_target.csv";
  std::ofstream(path) << "# target\ntheta,b_d\n0.3,1.0\n0.7,3.0\n";
  problem::load_target_csv(obj, path);
  for (std::size_t i = 0; i < obj.edges.size(); ++i) {
    const double p = obj.edges[i].param;
    const double expect = p <= 0.3 ? 1.0 : p >= 0.7 ? 3.0 : 1.0 + 2.0 * (p - 0.3) / 0.4;
    EXPECT_NEAR(obj.target[i], expect, 1e-12);
  }
  std::ofstream(path) << "theta,b_d\n0.5,1.0\n0.4,3.0\n";
  EXPECT_THROW(problem::load_target_csv(obj, path), ConfigError);
  std::ofstream(path) << "x,b\n0.1,1.0\n0.4,3.0\n";
  EXPECT_THROW(problem::load_target_csv(obj, path), ConfigError);
  std::filesystem::remove(path);
}

TEST(ProblemSetup, UnknownProblemKind) {
  EXPECT_EQ(problem::benchmark_from_string("square"), BenchmarkKind::Square);
  EXPECT_EQ(problem::benchmark_from_string("mini_motor"), BenchmarkKind::MiniMotor);
  EXPECT_THROW(problem::benchmark_from_string("torus"), ConfigError);
}

TEST(ProblemSetup, Gamma0TouchingDesignIsRejected) {
  auto bp = problem::build_benchmark_problem(BenchmarkKind::Square, 16, {});
  bp.mesh.regions[bp.objective.edges.front().element] = mesh::Region::Design;
  EXPECT_THROW(problem::check_objective(bp.mesh, bp.objective), ConfigError);
}

TEST(ProblemSetup, SourcesLiveInTheirRegions) {
  problem::BenchmarkParams prm;
  prm.coil_current = 1e6;
  const auto bp = problem::build_benchmark_problem(BenchmarkKind::Square, 16, prm);
  for (int t = 0; t < bp.mesh.num_tris(); ++t) {
    EXPECT_EQ(bp.sources.jz[t] != 0.0, bp.mesh.regions[t] == mesh::Region::Coil);
    EXPECT_EQ(bp.sources.magnetization[t] != Vec2{}, bp.mesh.regions[t] == mesh::Region::Magnet);
  }
}
