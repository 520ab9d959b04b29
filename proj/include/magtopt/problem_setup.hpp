#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "magtopt/fem.hpp"
#include "magtopt/mesh.hpp"

namespace magtopt::problem {

struct ObjectiveEdge {
  int a = 0;
  int b = 0;
  int element = -1;   ///< triangle supplying grad u
  Vec2 tangent;       ///< unit normal rotated by +90 degrees
  double length = 0.0;
  double param = 0.0;  ///< x coordinate (square) or polar angle (motor) of the midpoint
};

/// Air-gap tracking functional sum_e l_e (grad u . tau_e - B_d,e)^2.
struct ObjectiveSpec {
  std::vector<ObjectiveEdge> edges;
  std::vector<double> target;

  double total_length() const;
};

/// Builds the objective on the GAMMA0 edges of m. `reference_normal` picks the
/// orientation of each edge normal and the side whose element supplies grad u.
ObjectiveSpec make_objective(const mesh::TriMesh& m, const std::function<Vec2(Vec2)>& reference_normal,
                             const std::function<double(Vec2)>& param);
/// Throws ConfigError when a GAMMA0 edge touches a DESIGN element.
void check_objective(const mesh::TriMesh& m, const ObjectiveSpec& spec);

double eval_objective(const mesh::TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec);
/// <G~', eta> = 2 sum_e l_e (grad u . tau_e - B_d,e)(grad eta . tau_e) as a nodal vector.
fem::Vector assemble_adjoint_rhs(const mesh::TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec);
/// grad u . tau per edge.
std::vector<double> normal_flux(const mesh::TriMesh& m, const std::vector<double>& u, const ObjectiveSpec& spec);

/// b_max (tanh((p - p0)/w) - tanh((p - p1)/w)) / 2
double smoothed_plateau(double p, double p0, double p1, double w, double b_max);

/// Replaces the target by linear interpolation of a `theta,b_d` CSV in the
/// edge parameter (x for the square, radians for the motor).
void load_target_csv(ObjectiveSpec& spec, const std::filesystem::path& path);

enum class BenchmarkKind { Square, MiniMotor };
std::string_view to_string(BenchmarkKind k);
BenchmarkKind benchmark_from_string(std::string_view s);

struct BenchmarkParams {
  double magnetization = 8.0e6;  ///< |M| in A/m
  double b_max = 1.0;            ///< plateau of the target in T
  double target_width = 0.03;    ///< tanh smoothing width (x units or radians)
  double target_p0 = 0.25;       ///< plateau start (square: x, motor: angle)
  double target_p1 = 0.5;        ///< plateau end
  double coil_current = 0.0;     ///< J_z on COIL elements
};

/// Defaults for the mini-motor: plateau over the magnet arc.
BenchmarkParams default_params(BenchmarkKind k);

struct BenchmarkProblem {
  BenchmarkKind kind = BenchmarkKind::Square;
  mesh::TriMesh mesh;
  fem::SourceSpec sources;
  ObjectiveSpec objective;
};

BenchmarkProblem build_benchmark_problem(BenchmarkKind kind, int resolution, const BenchmarkParams& params);

}  // namespace magtopt::problem
