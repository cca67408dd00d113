#include "recon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>

#include "recon/errors.hpp"

namespace recon {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

}  // namespace

TriMesh::TriMesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles,
                 std::vector<BoundaryEdge> boundary, std::vector<int> regions,
                 std::optional<Circle> circle)
    : nodes_(std::move(nodes)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)),
      regions_(std::move(regions)),
      circle_(circle) {
  validate();
}

void TriMesh::validate() {
  const int n = static_cast<int>(nodes_.size());
  if (triangles_.empty()) throw ValidationError("mesh has no triangles");
  if (regions_.size() != triangles_.size()) {
    throw ValidationError("region list has " + std::to_string(regions_.size()) +
                          " entries for " + std::to_string(triangles_.size()) + " triangles");
  }

  areas_.resize(triangles_.size());
  std::unordered_map<std::uint64_t, int> edge_count;
  edge_count.reserve(triangles_.size() * 3);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= n) {
        throw ValidationError("triangle " + std::to_string(t) + " references node " +
                              std::to_string(v) + " out of range");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw ValidationError("triangle " + std::to_string(t) + " repeats a node");
    }
    const double a = signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (!(a > 0.0)) {
      throw ValidationError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    areas_[t] = a;
    for (int k = 0; k < 3; ++k) ++edge_count[edge_key(tri[k], tri[(k + 1) % 3])];
    if (regions_[t] < 0) throw ValidationError("negative region id on triangle " + std::to_string(t));
  }

  std::size_t open_edges = 0;
  for (const auto& [key, count] : edge_count) {
    if (count > 2) throw ValidationError("edge shared by more than two triangles");
    if (count == 1) ++open_edges;
  }

  on_boundary_.assign(nodes_.size(), 0);
  std::vector<int> degree(nodes_.size(), 0);
  std::unordered_map<std::uint64_t, int> seen;
  for (std::size_t e = 0; e < boundary_.size(); ++e) {
    const auto& be = boundary_[e];
    for (int v : be.nodes) {
      if (v < 0 || v >= n) {
        throw ValidationError("boundary edge " + std::to_string(e) + " references node " +
                              std::to_string(v) + " out of range");
      }
    }
    const auto key = edge_key(be.nodes[0], be.nodes[1]);
    auto it = edge_count.find(key);
    if (it == edge_count.end() || it->second != 1) {
      throw ValidationError("boundary edge " + std::to_string(e) +
                            " is not the face of exactly one triangle");
    }
    if (++seen[key] > 1) throw ValidationError("duplicate boundary edge " + std::to_string(e));
    for (int v : be.nodes) {
      on_boundary_[v] = 1;
      ++degree[v];
    }
  }
  if (boundary_.size() != open_edges) {
    throw ValidationError("boundary edge list does not cover every open edge");
  }
  for (int v = 0; v < n; ++v) {
    if (on_boundary_[v] && degree[v] != 2) {
      throw ValidationError("boundary is not a union of closed loops at node " + std::to_string(v));
    }
  }

  boundary_nodes_.clear();
  boundary_slot_.assign(nodes_.size(), -1);
  for (int v = 0; v < n; ++v) {
    if (on_boundary_[v]) {
      boundary_slot_[v] = static_cast<int>(boundary_nodes_.size());
      boundary_nodes_.push_back(v);
    }
  }
  region_count_ = *std::max_element(regions_.begin(), regions_.end()) + 1;
}

Point TriMesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point& a = nodes_[tri[0]];
  const Point& b = nodes_[tri[1]];
  const Point& c = nodes_[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

double TriMesh::edge_length(const BoundaryEdge& e) const {
  return distance(nodes_[e.nodes[0]], nodes_[e.nodes[1]]);
}

double TriMesh::boundary_length() const {
  double s = 0.0;
  for (const auto& e : boundary_) s += edge_length(e);
  return s;
}

double TriMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) h = std::max(h, distance(nodes_[tri[k]], nodes_[tri[(k + 1) % 3]]));
  }
  return h;
}

int TriMesh::locate(Point p) const {
  constexpr double kTol = 1e-12;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    const Point& a = nodes_[tri[0]];
    const Point& b = nodes_[tri[1]];
    const Point& c = nodes_[tri[2]];
    const double area2 = 2.0 * areas_[t];
    const double l0 = 2.0 * signed_area(p, b, c) / area2;
    const double l1 = 2.0 * signed_area(a, p, c) / area2;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= -kTol && l1 >= -kTol && l2 >= -kTol) return static_cast<int>(t);
  }
  return -1;
}

TriMesh TriMesh::with_regions(std::vector<int> regions) const {
  return TriMesh(nodes_, triangles_, boundary_, std::move(regions), circle_);
}

// ---------------------------------------------------------------------------

PartitionSpec PartitionSpec::whole_domain(Point sample) {
  PartitionSpec s;
  s.kind = Kind::WholeDomain;
  s.sample_points = {sample};
  return s;
}

PartitionSpec PartitionSpec::half_plane(int axis, double threshold, Point sample_low,
                                        Point sample_high) {
  if (axis != 0 && axis != 1) throw ArgumentError("half-plane axis must be 0 or 1");
  PartitionSpec s;
  s.kind = Kind::HalfPlane;
  s.axis = axis;
  s.threshold = threshold;
  s.sample_points = {sample_low, sample_high};
  return s;
}

PartitionSpec PartitionSpec::quadrants(Point center, double xi) {
  PartitionSpec s;
  s.kind = Kind::Quadrants;
  s.center = center;
  s.sample_points = {{center.x + xi, center.y + xi},
                     {center.x - xi, center.y + xi},
                     {center.x - xi, center.y - xi},
                     {center.x + xi, center.y - xi}};
  return s;
}

PartitionSpec PartitionSpec::disk_plus_halves(Point center, double radius, Point sample_center,
                                              Point sample_left, Point sample_right) {
  if (!(radius > 0.0)) throw ArgumentError("disk-plus-halves radius must be positive");
  PartitionSpec s;
  s.kind = Kind::DiskPlusHalves;
  s.center = center;
  s.radius = radius;
  s.sample_points = {sample_center, sample_left, sample_right};
  return s;
}

int PartitionSpec::region_count() const {
  switch (kind) {
    case Kind::WholeDomain: return 1;
    case Kind::HalfPlane: return 2;
    case Kind::Quadrants: return 4;
    case Kind::DiskPlusHalves: return 3;
  }
  return 0;
}

int PartitionSpec::region_of(Point p) const {
  switch (kind) {
    case Kind::WholeDomain: return 0;
    case Kind::HalfPlane: {
      const double v = axis == 0 ? p.x : p.y;
      return v < threshold ? 0 : 1;
    }
    case Kind::Quadrants: {
      const bool right = p.x >= center.x;
      const bool top = p.y >= center.y;
      if (right && top) return 0;
      if (!right && top) return 1;
      if (!right) return 2;
      return 3;
    }
    case Kind::DiskPlusHalves: {
      const double dx = p.x - center.x;
      const double dy = p.y - center.y;
      if (dx * dx + dy * dy <= radius * radius) return 0;
      return p.x < center.x ? 1 : 2;
    }
  }
  return 0;
}

std::string PartitionSpec::region_name(int region) const {
  switch (kind) {
    case Kind::WholeDomain: return "Omega";
    case Kind::HalfPlane: return region == 0 ? "Omega_L" : "Omega_R";
    case Kind::Quadrants: return "Omega_Q" + std::to_string(region + 1);
    case Kind::DiskPlusHalves: {
      static const char* names[] = {"Omega_C", "Omega_L", "Omega_R"};
      return names[region];
    }
  }
  return "region_" + std::to_string(region);
}

void PartitionSpec::validate() const {
  const int n = region_count();
  if (static_cast<int>(sample_points.size()) != n) {
    throw ConfigError("partition declares " + std::to_string(n) + " regions but has " +
                      std::to_string(sample_points.size()) + " sample points");
  }
  for (int r = 0; r < n; ++r) {
    const Point& p = sample_points[static_cast<std::size_t>(r)];
    if (region_of(p) != r) {
      throw ConfigError("sample point for " + region_name(r) + " lies outside its region");
    }
    bool on_interface = false;
    switch (kind) {
      case Kind::WholeDomain: break;
      case Kind::HalfPlane: on_interface = (axis == 0 ? p.x : p.y) == threshold; break;
      case Kind::Quadrants: on_interface = p.x == center.x || p.y == center.y; break;
      case Kind::DiskPlusHalves: {
        const double d = std::hypot(p.x - center.x, p.y - center.y);
        on_interface = d == radius || (r != 0 && p.x == center.x);
        break;
      }
    }
    if (on_interface) {
      throw ConfigError("sample point for " + region_name(r) + " lies on a region interface");
    }
  }
}

// ---------------------------------------------------------------------------

TriMesh build_square_mesh(double xmin, double xmax, double ymin, double ymax, int n) {
  if (!(xmax > xmin) || !(ymax > ymin)) throw ArgumentError("square mesh needs positive extents");
  if (n < 1) throw ArgumentError("square mesh needs at least one cell per side");

  const int m = n + 1;
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(m * m));
  for (int j = 0; j < m; ++j) {
    // Snap the last row/column to the exact extent.
    const double y = j == n ? ymax : ymin + (ymax - ymin) * j / n;
    for (int i = 0; i < m; ++i) {
      const double x = i == n ? xmax : xmin + (xmax - xmin) * i / n;
      nodes.push_back({x, y});
    }
  }
  auto id = [m](int i, int j) { return j * m + i; };

  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p11 = id(i + 1, j + 1), p01 = id(i, j + 1);
      tris.push_back({p00, p10, p11});
      tris.push_back({p00, p11, p01});
    }
  }

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(static_cast<std::size_t>(4 * n));
  for (int i = 0; i < n; ++i) boundary.push_back({{id(i, 0), id(i + 1, 0)}, labels::kBottom});
  for (int j = 0; j < n; ++j) boundary.push_back({{id(n, j), id(n, j + 1)}, labels::kRight});
  for (int i = n; i > 0; --i) boundary.push_back({{id(i, n), id(i - 1, n)}, labels::kTop});
  for (int j = n; j > 0; --j) boundary.push_back({{id(0, j), id(0, j - 1)}, labels::kLeft});

  std::vector<int> regions(tris.size(), 0);
  return TriMesh(std::move(nodes), std::move(tris), std::move(boundary), std::move(regions));
}

TriMesh build_disk_mesh(Point center, double radius, int n_rings) {
  if (!(radius > 0.0)) throw ArgumentError("disk radius must be positive");
  if (n_rings < 1) throw ArgumentError("disk mesh needs at least one ring");

  // Ring k (k >= 1) carries 6k equally spaced nodes; ring 0 is the center.
  std::vector<Point> nodes;
  std::vector<int> ring_start(static_cast<std::size_t>(n_rings + 1));
  nodes.push_back(center);
  ring_start[0] = 0;
  for (int k = 1; k <= n_rings; ++k) {
    ring_start[k] = static_cast<int>(nodes.size());
    const int count = 6 * k;
    const double r = radius * k / n_rings;
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / count;
      nodes.push_back({center.x + r * std::cos(theta), center.y + r * std::sin(theta)});
    }
  }

  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < 6; ++j) tris.push_back({0, ring_start[1] + j, ring_start[1] + (j + 1) % 6});
  for (int k = 2; k <= n_rings; ++k) {
    const int m_in = 6 * (k - 1), m_out = 6 * k;
    const int s_in = ring_start[k - 1], s_out = ring_start[k];
    int i = 0, o = 0;
    // Merge-walk both rings by angle; integer comparison of (o+1)/m_out
    // against (i+1)/m_in avoids round-off ties.
    while (i < m_in || o < m_out) {
      const bool advance_outer =
          o < m_out && (i == m_in || static_cast<long>(o + 1) * m_in <= static_cast<long>(i + 1) * m_out);
      if (advance_outer) {
        tris.push_back({s_in + i % m_in, s_out + o, s_out + (o + 1) % m_out});
        ++o;
      } else {
        tris.push_back({s_in + i, s_out + o % m_out, s_in + (i + 1) % m_in});
        ++i;
      }
    }
  }

  std::vector<BoundaryEdge> boundary;
  const int m = 6 * n_rings, s = ring_start[n_rings];
  for (int j = 0; j < m; ++j) boundary.push_back({{s + j, s + (j + 1) % m}, labels::kCircle});

  std::vector<int> regions(tris.size(), 0);
  return TriMesh(std::move(nodes), std::move(tris), std::move(boundary), std::move(regions),
                 Circle{center, radius});
}

TriMesh refine_uniform(const TriMesh& mesh) {
  std::vector<Point> nodes = mesh.nodes();
  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.num_triangles() * 3);

  std::unordered_map<std::uint64_t, char> is_boundary;
  for (const auto& e : mesh.boundary_edges()) is_boundary[edge_key(e.nodes[0], e.nodes[1])] = 1;

  const auto& circle = mesh.circle();
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Point p{0.5 * (nodes[a].x + nodes[b].x), 0.5 * (nodes[a].y + nodes[b].y)};
    if (circle && is_boundary.count(key)) {
      const double dx = p.x - circle->center.x, dy = p.y - circle->center.y;
      const double r = std::hypot(dx, dy);
      p = {circle->center.x + circle->radius * dx / r, circle->center.y + circle->radius * dy / r};
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(p);
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<std::array<int, 3>> tris;
  std::vector<int> regions;
  tris.reserve(mesh.num_triangles() * 4);
  regions.reserve(mesh.num_triangles() * 4);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto [a, b, c] = mesh.triangle(t);
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
    regions.insert(regions.end(), 4, mesh.regions()[t]);
  }

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(mesh.num_boundary_edges() * 2);
  for (const auto& e : mesh.boundary_edges()) {
    const int m = midpoint.at(edge_key(e.nodes[0], e.nodes[1]));
    boundary.push_back({{e.nodes[0], m}, e.label});
    boundary.push_back({{m, e.nodes[1]}, e.label});
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(boundary), std::move(regions), circle);
}

TriMesh refine_uniform(const TriMesh& mesh, int levels) {
  if (levels < 0) throw ArgumentError("refinement levels must be non-negative");
  TriMesh out = mesh;
  for (int l = 0; l < levels; ++l) out = refine_uniform(out);
  return out;
}

TriMesh assign_regions(const TriMesh& mesh, const PartitionSpec& spec) {
  spec.validate();
  const int n = spec.region_count();
  std::vector<int> regions(mesh.num_triangles());
  std::vector<std::size_t> counts(static_cast<std::size_t>(n), 0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    regions[t] = spec.region_of(mesh.centroid(t));
    ++counts[static_cast<std::size_t>(regions[t])];
  }
  for (int r = 0; r < n; ++r) {
    if (counts[static_cast<std::size_t>(r)] == 0) {
      throw ConfigError("region " + spec.region_name(r) + " captures no triangles");
    }
  }
  return mesh.with_regions(std::move(regions));
}

}  // namespace recon
