#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magtopt/linalg2.hpp"

namespace magtopt::mesh {

enum class Region : std::uint8_t {
  FerroFixed,
  AirFixed,
  Design,
  Coil,
  Magnet,
  AirGap,
  Inclusion,  ///< unit inclusion of the cell-problem disc
  Exterior,   ///< background of the cell-problem disc
};

enum class BoundaryTag : std::uint8_t { DirichletOuter, Gamma0 };

std::string_view to_string(Region r);
std::string_view to_string(BoundaryTag t);
Region region_from_string(std::string_view s);
BoundaryTag boundary_tag_from_string(std::string_view s);

struct TaggedEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::DirichletOuter;
};

/// P1 triangle mesh. Triangles are counter-clockwise.
struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  std::vector<Region> regions;
  std::vector<TaggedEdge> edges;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_tris() const { return static_cast<int>(tris.size()); }

  double signed_area(int t) const;
  double area(int t) const { return signed_area(t); }
  Vec2 centroid(int t) const;
  /// Gradients of the three barycentric basis functions on triangle t.
  std::array<Vec2, 3> basis_gradients(int t) const;
  /// Gradient of the P1 interpolant of nodal values on triangle t.
  Vec2 gradient(int t, const std::vector<double>& nodal) const;

  double total_area() const;
  double region_area(Region r) const;
  int count_region(Region r) const;
  /// Node flags: 1 on DirichletOuter edges.
  std::vector<char> dirichlet_nodes() const;
  std::vector<TaggedEdge> edges_with(BoundaryTag tag) const;
};

struct MeshCheck {
  bool ok = true;
  int vertices = 0;
  int edges = 0;
  int faces = 0;
  int boundary_edges = 0;
  int euler() const { return vertices - edges + faces; }
  std::vector<std::string> problems;
};

/// Positive areas, edge conformity, tags present, Euler characteristic.
MeshCheck check_mesh(const TriMesh& m);

/// Unit square, n x n cells, alternating diagonals, one region, Dirichlet boundary.
TriMesh generate_unit_square(int n, Region region = Region::AirFixed);

/// Geometry of the square benchmark; all values in units of the side length.
struct SquareLayout {
  double design_lo = 0.3, design_hi = 0.7;
  double magnet_x0 = 0.35, magnet_x1 = 0.65, magnet_y0 = 0.1, magnet_y1 = 0.2;
  double back_x0 = 0.04, back_x1 = 0.96, back_y0 = 0.04, back_y1 = 0.1;
  double stator_x0 = 0.04, stator_x1 = 0.96, stator_y0 = 0.85, stator_y1 = 0.95;
  double leg_width = 0.06;  ///< side legs joining back iron and stator at x0 and x1
  double gap_y0 = 0.75, gap_y1 = 0.85;
  double gamma_y = 0.8, gamma_x0 = 0.2, gamma_x1 = 0.8;
  double coil_x0 = 0.14, coil_x1 = 0.24, coil_y0 = 0.3, coil_y1 = 0.7;
};

/// Square benchmark on [0,1]^2; tags by element centroid, Gamma0 on the grid
/// line nearest gamma_y. Requires n >= 8.
TriMesh generate_square_benchmark(int n, const SquareLayout& layout = {});

/// Concentric rings: radii[0] = 0 is the centre node, ring k carries counts[k]
/// equispaced nodes starting at angle 0. Adjacent rings are stitched by
/// angle. The outermost ring edges are tagged DirichletOuter.
TriMesh build_ring_mesh(const std::vector<double>& radii, const std::vector<int>& counts);

struct DiscSpec {
  double radius = 1000.0;
  double inclusion_radius = 1.0;
  double h0 = 0.05;
  double grading = 1.15;
};

/// Disc centred at the origin with a node ring on |x| = inclusion_radius.
/// Triangles inside are tagged Inclusion, outside Exterior.
TriMesh generate_disc_mesh(const DiscSpec& spec);
TriMesh generate_disc_mesh(double radius, double inclusion_radius, double grading);

struct MotorLayout {
  double design_r0 = 0.2, design_r1 = 0.38;
  double design_th0 = 0.2 * 3.14159265358979323846, design_th1 = 0.8 * 3.14159265358979323846;
  double magnet_r0 = 0.38, magnet_r1 = 0.44;
  double magnet_th0 = 0.3 * 3.14159265358979323846, magnet_th1 = 0.7 * 3.14159265358979323846;
  double rotor_r = 0.44;
  double gamma_r = 0.47;
  double stator_r0 = 0.5, stator_r1 = 0.8;
  double outer_r = 1.0;
};

/// Annular mini-motor: rotor disc with one magnet arc and one design sector,
/// air gap containing the Gamma0 circle, stator ring, outer air. `n` sets the
/// angular resolution (4n segments on the air-gap rings).
TriMesh generate_mini_motor(int n, const MotorLayout& layout = {});

struct PointLocation {
  int tri = -1;
  std::array<double, 3> bary{};
};

std::array<double, 3> barycentric(const TriMesh& m, int t, Vec2 x);
/// Containing triangle of x; nullopt outside the mesh.
std::optional<PointLocation> locate_point(const TriMesh& m, Vec2 x);
/// Bucket-grid accelerated point location for repeated queries.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& m, int buckets_per_axis = 0);
  std::optional<PointLocation> locate(Vec2 x) const;
  double interpolate(const std::vector<double>& nodal, Vec2 x) const;

 private:
  const TriMesh* mesh_;
  Vec2 lo_, hi_;
  int nb_ = 1;
  std::vector<std::vector<int>> buckets_;
};

void write_mesh(const TriMesh& m, const std::filesystem::path& path, std::string_view header_comment = {});
TriMesh read_mesh(const std::filesystem::path& path);

}  // namespace magtopt::mesh
