#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include "magtopt/config.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/material.hpp"
#include "magtopt/mesh.hpp"
#include "magtopt/optimizer.hpp"
#include "magtopt/problem_setup.hpp"

namespace magtopt::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kSolverError = 2, kIoError = 3 };

struct RunConfig {
  problem::BenchmarkKind kind = problem::BenchmarkKind::Square;
  int resolution = 32;
  problem::BenchmarkParams params;
  std::filesystem::path target_path;

  std::string curve = "marrocco";
  material::MarroccoParams marrocco;
  double linear_nu = material::LinearParams{}.nu;
  std::filesystem::path spline_path;
  double validate_s_max = 1.0e4;

  bool j2_enabled = true;
  std::filesystem::path table_case1;
  std::filesystem::path table_case2;
  double t_max = 5.0;
  int t_samples = 201;
  mesh::DiscSpec disc;

  opt::OptimizerConfig optimizer;
  fem::NewtonOptions newton;
  int snapshot_every = 10;
  std::filesystem::path design_psi;

  std::filesystem::path out_dir = "magtopt_out";
  std::uint64_t seed = 1;
  int workers = 0;

  std::string hash;  ///< config hash excluding `out` and `workers`
};

/// Reads every known key; unknown keys are a configuration error.
RunConfig load_run_config(const config::Config& c);
material::ReluctivityCurve make_curve(const RunConfig& rc);

/// Property checks with a seeded RNG. Returns the number of failures.
int run_selftest(std::uint64_t seed, std::ostream& out);

int run_cli(int argc, char** argv);

}  // namespace magtopt::cli
