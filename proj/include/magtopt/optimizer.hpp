#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "magtopt/cell_problems.hpp"
#include "magtopt/fem.hpp"
#include "magtopt/mesh.hpp"
#include "magtopt/problem_setup.hpp"
#include "magtopt/topo_derivative.hpp"

namespace magtopt::opt {

/// L2(design region) geometry for nodal fields stored over all mesh nodes.
class DesignSpace {
 public:
  explicit DesignSpace(const mesh::TriMesh& m);

  const mesh::TriMesh& mesh() const { return *mesh_; }
  const std::vector<int>& design_elements() const { return elements_; }
  const std::vector<int>& design_nodes() const { return nodes_; }
  double design_area() const { return area_; }

  /// a^T M b with the exact P1 mass matrix of the DESIGN elements.
  double inner(const std::vector<double>& a, const std::vector<double>& b) const;
  double norm(const std::vector<double>& a) const;
  std::vector<double> normalized(const std::vector<double>& a) const;
  /// Area fraction of DESIGN elements with psi(centroid) > 0.
  double ferro_fraction(const std::vector<double>& psi) const;

 private:
  const mesh::TriMesh* mesh_;
  std::vector<int> elements_;
  std::vector<int> nodes_;
  double area_ = 0.0;
  Eigen::SparseMatrix<double> mass_;
};

double l2_inner(const mesh::TriMesh& m, const std::vector<double>& a, const std::vector<double>& b);

/// [sin((1-kappa) theta) psi + sin(kappa theta) g] / sin(theta)
std::vector<double> spherical_update(const std::vector<double>& psi, const std::vector<double>& g, double theta,
                                     double kappa);

/// Positive cosine bump over the bounding box of the design nodes, unit norm.
std::vector<double> initial_levelset(const DesignSpace& space, double offset = 0.05);

struct OptimizerConfig {
  double kappa_start = 0.1;
  double kappa_min = 1.0 / 1048576.0;
  double theta_tol_deg = 1.0;
  int max_iter = 400;
};

enum class Status { Running, Converged, Stalled, MaxIter };
std::string to_string(Status s);

struct IterationRecord {
  int k = 0;
  double J = 0.0;
  double theta_deg = 0.0;
  double kappa = 0.0;  ///< step that produced psi_k (0 for k = 0)
  double ferro_fraction = 0.0;
  int trials = 0;      ///< objective evaluations spent on this step
};

struct OptState {
  int k = 0;
  std::vector<double> psi;
  std::vector<IterationRecord> history;
  Status status = Status::Running;
};

/// Objective and sensitivity of a level-set design.
class DesignProblem {
 public:
  virtual ~DesignProblem() = default;
  virtual const DesignSpace& space() const = 0;
  virtual double objective(const std::vector<double>& psi) = 0;
  /// Nodal generalized topological derivative at psi.
  virtual std::vector<double> sensitivity(const std::vector<double>& psi) = 0;
};

/// Magnetostatic tracking problem on a benchmark geometry.
class TopologyProblem final : public DesignProblem {
 public:
  TopologyProblem(const problem::BenchmarkProblem& bp, const material::ReluctivityCurve& curve,
                  topo::J2Tables tables, fem::NewtonOptions newton = {});

  const DesignSpace& space() const override { return space_; }
  double objective(const std::vector<double>& psi) override;
  std::vector<double> sensitivity(const std::vector<double>& psi) override;

  /// State, adjoint and derivative field at psi (solving if needed).
  const fem::StateSolution& state(const std::vector<double>& psi);
  std::vector<double> adjoint(const std::vector<double>& psi);
  topo::TopoDerivField derivative_field(const std::vector<double>& psi);

  const fem::FemSystem& system() const { return system_; }
  double max_abs_j2() const { return max_abs_j2_; }
  long clamped_lookups() const { return clamped_; }
  int state_solves() const { return solves_; }

 private:
  const problem::BenchmarkProblem* bp_;
  const material::ReluctivityCurve* curve_;
  topo::J2Tables tables_;
  fem::NewtonOptions newton_;
  fem::FemSystem system_;
  fem::Vector rhs_;
  DesignSpace space_;
  std::optional<fem::StateSolution> cached_state_;
  std::vector<double> warm_start_;
  double max_abs_j2_ = 0.0;
  long clamped_ = 0;
  int solves_ = 0;
};

/// Attempts kappa_start, kappa_start/2, ... down to kappa_min and keeps the
/// first trial that lowers the objective. Returns false on a stall.
bool step(OptState& state, const DesignSpace& space, const std::vector<double>& g_unit, double theta,
          double current_J, const std::function<double(const std::vector<double>&)>& objective,
          const OptimizerConfig& cfg, IterationRecord& record);

using IterationCallback = std::function<void(const OptState&, const IterationRecord&)>;

/// Level-set descent until theta < theta_tol, a stall, or max_iter.
OptState run(DesignProblem& problem, std::vector<double> psi0, const OptimizerConfig& cfg,
             const IterationCallback& on_iteration = {});

}  // namespace magtopt::opt
