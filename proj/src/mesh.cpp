#include "magtopt/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "magtopt/errors.hpp"
#include "magtopt/util.hpp"

namespace magtopt::mesh {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::array<std::pair<Region, std::string_view>, 8> kRegionNames{{
    {Region::FerroFixed, "FERRO_FIXED"},
    {Region::AirFixed, "AIR_FIXED"},
    {Region::Design, "DESIGN"},
    {Region::Coil, "COIL"},
    {Region::Magnet, "MAGNET"},
    {Region::AirGap, "AIRGAP"},
    {Region::Inclusion, "INCLUSION"},
    {Region::Exterior, "EXTERIOR"},
}};

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

double polar_angle(Vec2 p) {
  double a = std::atan2(p.y, p.x);
  if (a < 0.0) a += kTwoPi;
  return a;
}

void push_ccw(TriMesh& m, int a, int b, int c) {
  const Vec2 pa = m.nodes[a], pb = m.nodes[b], pc = m.nodes[c];
  if (cross(pb - pa, pc - pa) < 0.0) std::swap(b, c);
  m.tris.push_back({a, b, c});
}

}  // namespace

std::string_view to_string(Region r) {
  for (const auto& [reg, name] : kRegionNames)
    if (reg == r) return name;
  return "UNKNOWN";
}

std::string_view to_string(BoundaryTag t) { return t == BoundaryTag::Gamma0 ? "GAMMA0" : "DIRICHLET_OUTER"; }

Region region_from_string(std::string_view s) {
  for (const auto& [reg, name] : kRegionNames)
    if (name == s) return reg;
  throw IoError(fmt::format("unknown region tag '{}'", s));
}

BoundaryTag boundary_tag_from_string(std::string_view s) {
  if (s == "DIRICHLET_OUTER") return BoundaryTag::DirichletOuter;
  if (s == "GAMMA0") return BoundaryTag::Gamma0;
  throw IoError(fmt::format("unknown boundary tag '{}'", s));
}

double TriMesh::signed_area(int t) const {
  const auto& tri = tris[t];
  const Vec2 p0 = nodes[tri[0]], p1 = nodes[tri[1]], p2 = nodes[tri[2]];
  return 0.5 * cross(p1 - p0, p2 - p0);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = tris[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

std::array<Vec2, 3> TriMesh::basis_gradients(int t) const {
  const auto& tri = tris[t];
  const Vec2 p0 = nodes[tri[0]], p1 = nodes[tri[1]], p2 = nodes[tri[2]];
  const double two_a = cross(p1 - p0, p2 - p0);
  return {Vec2{p1.y - p2.y, p2.x - p1.x} / two_a, Vec2{p2.y - p0.y, p0.x - p2.x} / two_a,
          Vec2{p0.y - p1.y, p1.x - p0.x} / two_a};
}

Vec2 TriMesh::gradient(int t, const std::vector<double>& nodal) const {
  const auto g = basis_gradients(t);
  const auto& tri = tris[t];
  return g[0] * nodal[tri[0]] + g[1] * nodal[tri[1]] + g[2] * nodal[tri[2]];
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < num_tris(); ++t) s += area(t);
  return s;
}

double TriMesh::region_area(Region r) const {
  double s = 0.0;
  for (int t = 0; t < num_tris(); ++t)
    if (regions[t] == r) s += area(t);
  return s;
}

int TriMesh::count_region(Region r) const {
  return static_cast<int>(std::count(regions.begin(), regions.end(), r));
}

std::vector<char> TriMesh::dirichlet_nodes() const {
  std::vector<char> d(nodes.size(), 0);
  for (const auto& e : edges)
    if (e.tag == BoundaryTag::DirichletOuter) d[e.a] = d[e.b] = 1;
  return d;
}

std::vector<TaggedEdge> TriMesh::edges_with(BoundaryTag tag) const {
  std::vector<TaggedEdge> out;
  for (const auto& e : edges)
    if (e.tag == tag) out.push_back(e);
  return out;
}

MeshCheck check_mesh(const TriMesh& m) {
  MeshCheck c;
  c.vertices = m.num_nodes();
  c.faces = m.num_tris();
  if (m.regions.size() != m.tris.size()) {
    c.ok = false;
    c.problems.push_back("region tag count differs from triangle count");
  }
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(m.tris.size() * 2);
  std::vector<char> used(m.nodes.size(), 0);
  for (int t = 0; t < m.num_tris(); ++t) {
    for (int v : m.tris[t]) {
      if (v < 0 || v >= m.num_nodes()) {
        c.ok = false;
        c.problems.push_back(fmt::format("triangle {} references node {}", t, v));
        return c;
      }
      used[v] = 1;
    }
    if (!(m.signed_area(t) > 0.0)) {
      c.ok = false;
      c.problems.push_back(fmt::format("triangle {} has non-positive area", t));
    }
    for (int k = 0; k < 3; ++k) ++count[edge_key(m.tris[t][k], m.tris[t][(k + 1) % 3])];
  }
  c.edges = static_cast<int>(count.size());
  for (const auto& [key, n] : count) {
    if (n > 2) {
      c.ok = false;
      c.problems.push_back("edge shared by more than two triangles");
    }
    if (n == 1) ++c.boundary_edges;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end()) {
    c.ok = false;
    c.problems.push_back("unreferenced node");
  }
  int dirichlet_on_boundary = 0;
  for (const auto& e : m.edges) {
    const auto it = count.find(edge_key(e.a, e.b));
    if (it == count.end()) {
      c.ok = false;
      c.problems.push_back(fmt::format("tagged edge ({}, {}) is not a mesh edge", e.a, e.b));
      continue;
    }
    if (e.tag == BoundaryTag::DirichletOuter) {
      if (it->second != 1) {
        c.ok = false;
        c.problems.push_back("DIRICHLET_OUTER edge is interior");
      } else {
        ++dirichlet_on_boundary;
      }
    } else if (it->second != 2) {
      c.ok = false;
      c.problems.push_back("GAMMA0 edge is not interior");
    }
  }
  if (dirichlet_on_boundary != c.boundary_edges) {
    c.ok = false;
    c.problems.push_back("untagged boundary edges");
  }
  return c;
}

TriMesh generate_unit_square(int n, Region region) {
  if (n < 1) throw ConfigError("generate_unit_square: n must be >= 1");
  TriMesh m;
  const int np = n + 1;
  m.nodes.reserve(static_cast<std::size_t>(np) * np);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto id = [np](int i, int j) { return j * np + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        m.tris.push_back({p00, p10, p11});
        m.tris.push_back({p00, p11, p01});
      } else {
        m.tris.push_back({p00, p10, p01});
        m.tris.push_back({p10, p11, p01});
      }
    }
  }
  m.regions.assign(m.tris.size(), region);
  for (int i = 0; i < n; ++i) {
    m.edges.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::DirichletOuter});
    m.edges.push_back({id(n, i), id(n, i + 1), BoundaryTag::DirichletOuter});
    m.edges.push_back({id(i + 1, n), id(i, n), BoundaryTag::DirichletOuter});
    m.edges.push_back({id(0, i + 1), id(0, i), BoundaryTag::DirichletOuter});
  }
  return m;
}

TriMesh generate_square_benchmark(int n, const SquareLayout& L) {
  if (n < 8) throw ConfigError("generate_square_benchmark: n must be >= 8");
  TriMesh m = generate_unit_square(n, Region::AirFixed);
  const int jg = static_cast<int>(std::lround(L.gamma_y * n));
  const double yg = static_cast<double>(jg) / n;
  const double h = 1.0 / n;
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  for (int t = 0; t < m.num_tris(); ++t) {
    const Vec2 c = m.centroid(t);
    Region r = Region::AirFixed;
    if (std::abs(c.y - yg) < h && in(c.x, L.gamma_x0 - h, L.gamma_x1 + h))
      r = Region::AirGap;
    else if (in(c.x, L.design_lo, L.design_hi) && in(c.y, L.design_lo, L.design_hi))
      r = Region::Design;
    else if (in(c.x, L.magnet_x0, L.magnet_x1) && in(c.y, L.magnet_y0, L.magnet_y1))
      r = Region::Magnet;
    else if (in(c.x, L.back_x0, L.back_x1) && in(c.y, L.back_y0, L.back_y1))
      r = Region::FerroFixed;
    else if (in(c.x, L.stator_x0, L.stator_x1) && in(c.y, L.stator_y0, L.stator_y1))
      r = Region::FerroFixed;
    else if (in(c.y, L.back_y0, L.stator_y1) &&
             (in(c.x, L.back_x0, L.back_x0 + L.leg_width) || in(c.x, L.back_x1 - L.leg_width, L.back_x1)))
      r = Region::FerroFixed;
    else if (in(c.x, L.coil_x0, L.coil_x1) && in(c.y, L.coil_y0, L.coil_y1))
      r = Region::Coil;
    else if (in(c.y, L.gap_y0, L.gap_y1))
      r = Region::AirGap;
    m.regions[t] = r;
  }
  const int i0 = static_cast<int>(std::ceil(L.gamma_x0 * n - 1e-9));
  const int i1 = static_cast<int>(std::floor(L.gamma_x1 * n + 1e-9));
  for (int i = i0; i < i1; ++i) m.edges.push_back({jg * (n + 1) + i, jg * (n + 1) + i + 1, BoundaryTag::Gamma0});
  return m;
}

TriMesh build_ring_mesh(const std::vector<double>& radii, const std::vector<int>& counts) {
  if (radii.size() != counts.size() || radii.size() < 2) throw ConfigError("build_ring_mesh: bad ring list");
  if (radii[0] != 0.0 || counts[0] != 1) throw ConfigError("build_ring_mesh: first ring must be the centre node");
  TriMesh m;
  std::vector<int> start(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && (!(radii[k] > radii[k - 1]) || counts[k] < 3))
      throw ConfigError("build_ring_mesh: radii must increase and rings need >= 3 nodes");
    start[k] = m.num_nodes();
    for (int j = 0; j < counts[k]; ++j) {
      const double a = kTwoPi * j / counts[k];
      m.nodes.push_back(k == 0 ? Vec2{} : Vec2{radii[k] * std::cos(a), radii[k] * std::sin(a)});
    }
  }
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const int na = counts[k], nb = counts[k + 1];
    const int sa = start[k], sb = start[k + 1];
    if (na == 1) {
      for (int j = 0; j < nb; ++j) push_ccw(m, sa, sb + j, sb + (j + 1) % nb);
      continue;
    }
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const double next_a = static_cast<double>(i + 1) / na;
      const double next_b = static_cast<double>(j + 1) / nb;
      if (j == nb || (i < na && next_a <= next_b)) {
        push_ccw(m, sa + i % na, sa + (i + 1) % na, sb + j % nb);
        ++i;
      } else {
        push_ccw(m, sa + i % na, sb + j % nb, sb + (j + 1) % nb);
        ++j;
      }
    }
  }
  m.regions.assign(m.tris.size(), Region::AirFixed);
  const int sl = start.back(), nl = counts.back();
  for (int j = 0; j < nl; ++j) m.edges.push_back({sl + j, sl + (j + 1) % nl, BoundaryTag::DirichletOuter});
  return m;
}

TriMesh generate_disc_mesh(const DiscSpec& s) {
  if (!(s.inclusion_radius > 0.0) || !(s.radius > s.inclusion_radius))
    throw ConfigError("generate_disc_mesh: need radius > inclusion_radius > 0");
  if (!(s.grading >= 1.0)) throw ConfigError("generate_disc_mesh: grading must be >= 1");
  if (!(s.h0 > 0.0) || s.h0 > s.inclusion_radius) throw ConfigError("generate_disc_mesh: need 0 < h0 <= inclusion_radius");
  const double rho = s.inclusion_radius;
  const int n_ang = std::max(16, 4 * static_cast<int>(std::lround(kTwoPi * rho / (4.0 * s.h0))));
  const int m_in = std::max(1, static_cast<int>(std::lround(rho / s.h0)));
  std::vector<double> radii{0.0};
  std::vector<int> counts{1};
  for (int k = 1; k <= m_in; ++k) {
    radii.push_back(rho * k / m_in);
    counts.push_back(k == m_in ? n_ang : std::max(6, static_cast<int>(std::lround(static_cast<double>(n_ang) * k / m_in))));
  }
  const double h_ang = kTwoPi * rho / n_ang;
  double r = rho, dr = h_ang;
  while (r < s.radius) {
    double next = r + dr;
    if (next >= s.radius || s.radius - next < 0.5 * dr * s.grading) next = s.radius;
    radii.push_back(next);
    counts.push_back(n_ang);
    r = next;
    dr *= s.grading;
  }
  TriMesh m = build_ring_mesh(radii, counts);
  for (int t = 0; t < m.num_tris(); ++t)
    m.regions[t] = norm(m.centroid(t)) < rho ? Region::Inclusion : Region::Exterior;
  return m;
}

TriMesh generate_disc_mesh(double radius, double inclusion_radius, double grading) {
  DiscSpec s;
  s.radius = radius;
  s.inclusion_radius = inclusion_radius;
  s.grading = grading;
  s.h0 = std::min(s.h0, inclusion_radius);
  return generate_disc_mesh(s);
}

TriMesh generate_mini_motor(int n, const MotorLayout& L) {
  if (n < 8) throw ConfigError("generate_mini_motor: n must be >= 8");
  const bool ordered = 0.0 < L.design_r0 && L.design_r0 < L.design_r1 && L.design_r1 <= L.rotor_r &&
                       L.magnet_r0 < L.magnet_r1 && L.magnet_r1 <= L.rotor_r && L.rotor_r < L.gamma_r &&
                       L.gamma_r < L.stator_r0 && L.stator_r0 < L.stator_r1 && L.stator_r1 < L.outer_r;
  if (!ordered) throw ConfigError("generate_mini_motor: inconsistent radii");
  const int n_gap = 4 * n;
  const double h = kTwoPi * L.gamma_r / n_gap;
  std::vector<double> keys{0.0, L.design_r0, L.design_r1, L.magnet_r0, L.magnet_r1, L.rotor_r,
                           L.gamma_r, L.stator_r0, L.stator_r1, L.outer_r};
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<double> radii{0.0};
  std::vector<int> counts{1};
  for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
    const double len = keys[k + 1] - keys[k];
    const int parts = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    for (int p = 1; p <= parts; ++p) {
      const double r = p == parts ? keys[k + 1] : keys[k] + len * p / parts;
      radii.push_back(r);
      counts.push_back(std::max(6, static_cast<int>(std::lround(n_gap * r / L.gamma_r))));
    }
  }
  TriMesh m = build_ring_mesh(radii, counts);
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  for (int t = 0; t < m.num_tris(); ++t) {
    const Vec2 c = m.centroid(t);
    const double r = norm(c), th = polar_angle(c);
    Region reg = Region::AirFixed;
    if (r < L.rotor_r) {
      if (in(r, L.design_r0, L.design_r1) && in(th, L.design_th0, L.design_th1))
        reg = Region::Design;
      else if (in(r, L.magnet_r0, L.magnet_r1) && in(th, L.magnet_th0, L.magnet_th1))
        reg = Region::Magnet;
      else
        reg = Region::FerroFixed;
    } else if (r < L.stator_r0) {
      reg = Region::AirGap;
    } else if (r < L.stator_r1) {
      const double slot = kTwoPi / 12.0;
      const double phase = std::fmod(th + 0.5 * slot, slot);
      reg = (r < L.stator_r0 + 0.25 * (L.stator_r1 - L.stator_r0) && phase < 0.35 * slot) ? Region::Coil
                                                                                          : Region::FerroFixed;
    }
    m.regions[t] = reg;
  }
  const auto it = std::find(radii.begin(), radii.end(), L.gamma_r);
  const auto ring = static_cast<std::size_t>(it - radii.begin());
  int start = 0;
  for (std::size_t k = 0; k < ring; ++k) start += counts[k];
  const int cnt = counts[ring];
  for (int j = 0; j < cnt; ++j) m.edges.push_back({start + j, start + (j + 1) % cnt, BoundaryTag::Gamma0});
  return m;
}

std::array<double, 3> barycentric(const TriMesh& m, int t, Vec2 x) {
  const auto& tri = m.tris[t];
  const Vec2 p0 = m.nodes[tri[0]], p1 = m.nodes[tri[1]], p2 = m.nodes[tri[2]];
  const double two_a = cross(p1 - p0, p2 - p0);
  const double l0 = cross(p1 - x, p2 - x) / two_a;
  const double l1 = cross(p2 - x, p0 - x) / two_a;
  return {l0, l1, 1.0 - l0 - l1};
}

namespace {

std::optional<PointLocation> best_of(const TriMesh& m, const std::vector<int>& cand, Vec2 x) {
  PointLocation best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : cand) {
    const auto b = barycentric(m, t, x);
    const double mn = std::min({b[0], b[1], b[2]});
    if (mn > best_min) {
      best_min = mn;
      best.tri = t;
      best.bary = b;
      if (mn >= 0.0) break;
    }
  }
  if (best.tri < 0 || best_min < -1e-12) return std::nullopt;
  return best;
}

}  // namespace

std::optional<PointLocation> locate_point(const TriMesh& m, Vec2 x) {
  std::vector<int> all(m.tris.size());
  for (int t = 0; t < m.num_tris(); ++t) all[t] = t;
  return best_of(m, all, x);
}

PointLocator::PointLocator(const TriMesh& m, int buckets_per_axis) : mesh_(&m) {
  lo_ = hi_ = m.nodes.empty() ? Vec2{} : m.nodes[0];
  for (const Vec2& p : m.nodes) {
    lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
    hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
  }
  nb_ = buckets_per_axis > 0 ? buckets_per_axis
                             : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.tris.size()) / 4.0)));
  buckets_.assign(static_cast<std::size_t>(nb_) * nb_, {});
  const double wx = (hi_.x - lo_.x) / nb_, wy = (hi_.y - lo_.y) / nb_;
  auto cell = [&](double v, double lo, double w) {
    return std::clamp(static_cast<int>(std::floor((v - lo) / w)), 0, nb_ - 1);
  };
  for (int t = 0; t < m.num_tris(); ++t) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int v : m.tris[t]) {
      x0 = std::min(x0, m.nodes[v].x);
      x1 = std::max(x1, m.nodes[v].x);
      y0 = std::min(y0, m.nodes[v].y);
      y1 = std::max(y1, m.nodes[v].y);
    }
    for (int j = cell(y0, lo_.y, wy); j <= cell(y1, lo_.y, wy); ++j)
      for (int i = cell(x0, lo_.x, wx); i <= cell(x1, lo_.x, wx); ++i) buckets_[j * nb_ + i].push_back(t);
  }
}

std::optional<PointLocation> PointLocator::locate(Vec2 x) const {
  if (x.x < lo_.x || x.x > hi_.x || x.y < lo_.y || x.y > hi_.y) return std::nullopt;
  const double wx = (hi_.x - lo_.x) / nb_, wy = (hi_.y - lo_.y) / nb_;
  const int i = std::clamp(static_cast<int>(std::floor((x.x - lo_.x) / wx)), 0, nb_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((x.y - lo_.y) / wy)), 0, nb_ - 1);
  return best_of(*mesh_, buckets_[j * nb_ + i], x);
}

double PointLocator::interpolate(const std::vector<double>& nodal, Vec2 x) const {
  const auto loc = locate(x);
  if (!loc) throw std::out_of_range("PointLocator::interpolate: point outside mesh");
  const auto& tri = mesh_->tris[loc->tri];
  return loc->bary[0] * nodal[tri[0]] + loc->bary[1] * nodal[tri[1]] + loc->bary[2] * nodal[tri[2]];
}

void write_mesh(const TriMesh& m, const std::filesystem::path& path, std::string_view header_comment) {
  std::string out = "meshv1\n";
  if (!header_comment.empty()) out += fmt::format("# {}\n", header_comment);
  out += fmt::format("nodes {}\n", m.nodes.size());
  for (const Vec2& p : m.nodes) out += fmt::format("{} {}\n", fmt17(p.x), fmt17(p.y));
  out += fmt::format("tris {}\n", m.tris.size());
  for (int t = 0; t < m.num_tris(); ++t)
    out += fmt::format("{} {} {} {}\n", m.tris[t][0], m.tris[t][1], m.tris[t][2], to_string(m.regions[t]));
  out += fmt::format("bedges {}\n", m.edges.size());
  for (const auto& e : m.edges) out += fmt::format("{} {} {}\n", e.a, e.b, to_string(e.tag));
  write_text_file(path, out);
}

TriMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      return line;
    }
    throw IoError(fmt::format("{}: unexpected end of file", path.string()));
  };
  auto fail = [&](const std::string& what) {
    return IoError(fmt::format("{}:{}: {}", path.string(), lineno, what));
  };
  auto section = [&](std::string_view name) {
    std::istringstream ss(next());
    std::string key;
    long long count = -1;
    ss >> key >> count;
    if (key != name || count < 0) throw fail(fmt::format("expected '{} <count>'", name));
    return static_cast<std::size_t>(count);
  };
  if (next().find("meshv1") != 0) throw fail("missing meshv1 header");
  TriMesh m;
  const std::size_t nn = section("nodes");
  m.nodes.resize(nn);
  for (auto& p : m.nodes) {
    std::istringstream ss(next());
    if (!(ss >> p.x >> p.y)) throw fail("bad node line");
  }
  const std::size_t nt = section("tris");
  m.tris.resize(nt);
  m.regions.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::istringstream ss(next());
    std::string tag;
    if (!(ss >> m.tris[t][0] >> m.tris[t][1] >> m.tris[t][2] >> tag)) throw fail("bad triangle line");
    for (int v : m.tris[t])
      if (v < 0 || static_cast<std::size_t>(v) >= nn) throw fail("node index out of range");
    m.regions[t] = region_from_string(tag);
  }
  const std::size_t ne = section("bedges");
  m.edges.resize(ne);
  for (auto& e : m.edges) {
    std::istringstream ss(next());
    std::string tag;
    if (!(ss >> e.a >> e.b >> tag)) throw fail("bad edge line");
    e.tag = boundary_tag_from_string(tag);
  }
  return m;
}

}  // namespace magtopt::mesh
