#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace recon {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryEdge {
  std::array<int, 2> nodes;
  int label = 0;
};

/// Exact circular boundary carried by disk meshes so that refinement can
/// place new boundary nodes on the curve.
struct Circle {
  Point center;
  double radius = 1.0;
};

/// Boundary labels used by the built-in generators.
namespace labels {
inline constexpr int kBottom = 1;
inline constexpr int kRight = 2;
inline constexpr int kTop = 3;
inline constexpr int kLeft = 4;
inline constexpr int kCircle = 5;
}  // namespace labels

/// Conforming 2D triangulation with labelled boundary edges and one
/// subregion id per triangle. Immutable once constructed; the constructor
/// validates orientation, index ranges, edge manifoldness and boundary-loop
/// closure and throws ValidationError on any violation.
class TriMesh {
 public:
  TriMesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles,
          std::vector<BoundaryEdge> boundary, std::vector<int> regions,
          std::optional<Circle> circle = std::nullopt);

  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_; }
  const std::vector<int>& regions() const noexcept { return regions_; }
  const std::optional<Circle>& circle() const noexcept { return circle_; }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }
  std::size_t num_boundary_edges() const noexcept { return boundary_.size(); }

  const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::array<int, 3>& triangle(std::size_t t) const { return triangles_[t]; }

  double area(std::size_t t) const { return areas_[t]; }
  const std::vector<double>& areas() const noexcept { return areas_; }
  Point centroid(std::size_t t) const;
  double total_area() const;
  double boundary_length() const;
  double edge_length(const BoundaryEdge& e) const;
  double max_edge_length() const;

  /// Sorted, unique node indices lying on the boundary.
  const std::vector<int>& boundary_nodes() const noexcept { return boundary_nodes_; }
  bool is_boundary_node(int i) const { return on_boundary_[static_cast<std::size_t>(i)] != 0; }
  /// Position of a boundary node within boundary_nodes(), or -1.
  int boundary_slot(int i) const { return boundary_slot_[static_cast<std::size_t>(i)]; }

  /// Number of distinct region ids (max id + 1).
  int region_count() const noexcept { return region_count_; }

  /// Index of a triangle containing p (closed test with tolerance), or -1.
  int locate(Point p) const;

  /// Copy with a different region assignment.
  TriMesh with_regions(std::vector<int> regions) const;

 private:
  void validate();

  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<int> regions_;
  std::optional<Circle> circle_;

  std::vector<double> areas_;
  std::vector<int> boundary_nodes_;
  std::vector<char> on_boundary_;
  std::vector<int> boundary_slot_;
  int region_count_ = 0;
};

/// Subregion layout used for piecewise-constant coefficients, together with
/// one sample ("pick") point per subregion.
struct PartitionSpec {
  enum class Kind { WholeDomain, HalfPlane, Quadrants, DiskPlusHalves };

  Kind kind = Kind::WholeDomain;
  int axis = 0;            // HalfPlane: 0 -> x, 1 -> y
  double threshold = 0.0;  // HalfPlane split value
  Point center;            // Quadrants / DiskPlusHalves
  double radius = 0.5;     // DiskPlusHalves
  std::vector<Point> sample_points;

  static PartitionSpec whole_domain(Point sample);
  /// Region 0: coordinate < threshold, region 1: coordinate >= threshold.
  static PartitionSpec half_plane(int axis, double threshold, Point sample_low, Point sample_high);
  /// Regions Q1..Q4 counter-clockwise from the (+,+) quadrant, sampled at
  /// (+xi,+xi), (-xi,+xi), (-xi,-xi), (+xi,-xi) relative to the center.
  static PartitionSpec quadrants(Point center, double xi);
  /// Region 0: closed disk, region 1: outside and left of center.x,
  /// region 2: outside and right.
  static PartitionSpec disk_plus_halves(Point center, double radius, Point sample_center,
                                        Point sample_left, Point sample_right);

  int region_count() const;
  int region_of(Point p) const;
  std::string region_name(int region) const;
  /// Throws ConfigError unless every sample point lies strictly inside its region.
  void validate() const;
};

TriMesh build_square_mesh(double xmin, double xmax, double ymin, double ymax, int n_cells_per_side);
TriMesh build_disk_mesh(Point center, double radius, int n_rings);
TriMesh refine_uniform(const TriMesh& mesh);
TriMesh refine_uniform(const TriMesh& mesh, int levels);
TriMesh assign_regions(const TriMesh& mesh, const PartitionSpec& spec);

}  // namespace recon
