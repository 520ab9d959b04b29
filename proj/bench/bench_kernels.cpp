// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "magtopt/cell_problems.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/optimizer.hpp"
#include "magtopt/problem_setup.hpp"
#include "magtopt/topo_derivative.hpp"

using namespace magtopt;

namespace {

ExecPolicy policy_of(const benchmark::State& st) { return st.range(0) ? ExecPolicy::Parallel : ExecPolicy::Serial; }

const material::ReluctivityCurve& curve() {
  static const auto c = material::ReluctivityCurve::marrocco();
  return c;
}

struct Square {
  problem::BenchmarkProblem bp;
  fem::StateSolution state;
  std::vector<double> adjoint;

  explicit Square(int n)
      : bp(problem::build_benchmark_problem(problem::BenchmarkKind::Square, n,
                                            problem::default_params(problem::BenchmarkKind::Square))) {
    opt::TopologyProblem tp(bp, curve(), {});
    const auto psi = opt::initial_levelset(tp.space());
    state = tp.state(psi);
    adjoint = tp.adjoint(psi);
  }
};

const Square& square(int n) {
  static const Square s64(64), s128(128);
  return n == 64 ? s64 : s128;
}

void BM_AssembleTangent(benchmark::State& st) {
  const auto& sq = square(static_cast<int>(st.range(1)));
  const fem::FemSystem sys(sq.bp.mesh);
  fem::Coefficients c;
  c.curve = &curve();
  c.nonlinear = sq.state.ferro;
  const auto load = fem::assemble_rhs(sq.bp.mesh, sq.bp.sources);
  for (auto _ : st) benchmark::DoNotOptimize(fem::assemble_tangent(sys, c, sq.state.u, load, policy_of(st)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_AssembleTangent)->ArgsProduct({{0, 1}, {64, 128}})->Unit(benchmark::kMillisecond);

void BM_TopologicalDerivative(benchmark::State& st) {
  const auto& sq = square(static_cast<int>(st.range(1)));
  static const auto grid = cell::make_t_grid(5.0, 11);
  static const auto t1 = cell::build_j2_table(curve(), cell::Case::I, grid, mesh::DiscSpec{100.0, 1.0, 0.15, 1.3});
  static const auto t2 = cell::build_j2_table(curve(), cell::Case::II, grid, mesh::DiscSpec{100.0, 1.0, 0.15, 1.3});
  for (auto _ : st)
    benchmark::DoNotOptimize(topo::assemble_generalized_td(sq.bp.mesh, curve(), sq.state.ferro, sq.state.u,
                                                           sq.adjoint, {&t1, &t2}, policy_of(st)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_TopologicalDerivative)->ArgsProduct({{0, 1}, {64, 128}})->Unit(benchmark::kMillisecond);

void BM_J2TableBuild(benchmark::State& st) {
  const auto grid = cell::make_t_grid(4.0, 9);
  const mesh::DiscSpec disc{200.0, 1.0, 0.1, 1.2};
  for (auto _ : st) benchmark::DoNotOptimize(cell::build_j2_table(curve(), cell::Case::I, grid, disc, policy_of(st)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_J2TableBuild)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
