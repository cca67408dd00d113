#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "recon/errors.hpp"
#include "recon/mesh.hpp"
#include "recon/mesh_io.hpp"

using namespace recon;

namespace {

std::size_t count_edges(const TriMesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles()) {
    for (int i = 0; i < 3; ++i) {
      const int a = t[i], b = t[(i + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return edges.size();
}

void check_topology(const TriMesh& m) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : m.triangles()) {
    CHECK(oracle::signed_area(m.node(t[0]), m.node(t[1]), m.node(t[2])) > 0.0);
    for (int i = 0; i < 3; ++i) {
      const int a = t[i], b = t[(i + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::size_t open = 0;
  for (const auto& [e, n] : uses) {
    CHECK(n <= 2);
    if (n == 1) ++open;
  }
  CHECK(open == m.num_boundary_edges());
  std::map<int, int> degree;
  for (const auto& e : m.boundary_edges()) {
    CHECK(uses[{std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1])}] == 1);
    ++degree[e.nodes[0]];
    ++degree[e.nodes[1]];
  }
  for (const auto& [v, d] : degree) CHECK(d == 2);
}

double polygon_area(int n, double r) { return 0.5 * n * std::sin(2.0 * std::numbers::pi / n) * r * r; }

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("square mesh counts and area") {
    const auto m1 = build_square_mesh(-1, 1, -1, 1, 1);
    CHECK(m1.num_nodes() == 4);
    CHECK(m1.num_triangles() == 2);
    CHECK(m1.num_boundary_edges() == 4);
    CHECK(m1.total_area() == doctest::Approx(4.0).epsilon(1e-12));

    const auto m2 = build_square_mesh(-1, 1, -1, 1, 2);
    CHECK(m2.num_nodes() == 9);
    CHECK(m2.num_triangles() == 8);
    CHECK(m2.num_boundary_edges() == 8);

    const auto m8 = build_square_mesh(0, 1, 0, 1, 8);
    CHECK(std::abs(m8.total_area() - 1.0) < 1e-12);
    const auto v = static_cast<long>(m8.num_nodes());
    const auto e = static_cast<long>(count_edges(m8));
    const auto f = static_cast<long>(m8.num_triangles());
    CHECK(v - e + f == 1);
  }

  TEST_CASE("square mesh rejects bad input") {
    CHECK_THROWS_AS(build_square_mesh(1, -1, -1, 1, 2), ArgumentError);
    CHECK_THROWS_AS(build_square_mesh(-1, 1, -1, 1, 0), ArgumentError);
  }

  TEST_CASE("disk mesh geometry") {
    const auto m1 = build_disk_mesh({0, 0}, 1.0, 1);
    CHECK(m1.total_area() < std::numbers::pi);
    for (int b : m1.boundary_nodes()) CHECK(std::abs(std::hypot(m1.node(b).x, m1.node(b).y) - 1.0) < 1e-12);

    const auto m32 = build_disk_mesh({0, 0}, 1.0, 32);
    const int nb = static_cast<int>(m32.boundary_nodes().size());
    CHECK(std::abs(m32.total_area() - polygon_area(nb, 1.0)) < 1e-10);
    CHECK(std::abs(m32.total_area() - std::numbers::pi) < 0.005 * std::numbers::pi);

    const auto m16 = build_disk_mesh({0, 0}, 2.0, 16);
    CHECK(std::abs(m16.total_area() - 4.0 * std::numbers::pi) < 0.02 * 4.0 * std::numbers::pi);
    CHECK_THROWS_AS(build_disk_mesh({0, 0}, 0.0, 4), ArgumentError);
  }

  TEST_CASE("disk mesh sizes are deterministic") {
    const auto a = build_disk_mesh({0.3, -0.2}, 1.5, 7);
    const auto b = build_disk_mesh({0.3, -0.2}, 1.5, 7);
    CHECK(a.num_nodes() == b.num_nodes());
    CHECK(a.num_triangles() == b.num_triangles());
    CHECK(a.triangles() == b.triangles());
  }

  TEST_CASE("uniform refinement") {
    const auto sq = build_square_mesh(-1, 1, -1, 1, 1);
    const auto r = refine_uniform(sq);
    CHECK(r.num_triangles() == 8);
    CHECK(r.num_nodes() == 9);
    CHECK(std::abs(r.total_area() - 4.0) < 1e-12);
    CHECK(r.max_edge_length() == doctest::Approx(sq.max_edge_length() / 2.0).epsilon(1e-14));

    const auto disk = build_disk_mesh({0, 0}, 1.0, 4);
    const auto dr = refine_uniform(disk, 2);
    CHECK(dr.num_triangles() == 16 * disk.num_triangles());
    for (int b : dr.boundary_nodes()) CHECK(std::abs(std::hypot(dr.node(b).x, dr.node(b).y) - 1.0) < 1e-12);
    check_topology(dr);
  }

  TEST_CASE("refinement inherits regions") {
    const auto m = assign_regions(build_square_mesh(-1, 1, -1, 1, 4), PartitionSpec::quadrants({0, 0}, 0.5));
    const auto r = refine_uniform(m);
    for (std::size_t t = 0; t < r.num_triangles(); ++t) {
      const Point c = r.centroid(t);
      CHECK(r.regions()[t] == PartitionSpec::quadrants({0, 0}, 0.5).region_of(c));
    }
  }

  TEST_CASE("region assignment") {
    const auto sq = build_square_mesh(-1, 1, -1, 1, 8);
    const auto half = assign_regions(sq, PartitionSpec::half_plane(0, 0.0, {-0.95, 0}, {0.95, 0}));
    const auto left = std::count(half.regions().begin(), half.regions().end(), 0);
    CHECK(left * 2 == static_cast<long>(half.num_triangles()));

    const auto q = assign_regions(build_square_mesh(-1, 1, -1, 1, 2), PartitionSpec::quadrants({0, 0}, 0.5));
    for (int r = 0; r < 4; ++r) CHECK(std::count(q.regions().begin(), q.regions().end(), r) == 2);

    const double R = 0.5, h = 1.0 / 16.0;
    const auto dp = assign_regions(build_square_mesh(-1, 1, -1, 1, 32),
                                   PartitionSpec::disk_plus_halves({0, 0}, R, {0, 0}, {-0.95, 0}, {0.95, 0}));
    double area[3] = {0, 0, 0};
    for (std::size_t t = 0; t < dp.num_triangles(); ++t) area[dp.regions()[t]] += dp.area(t);
    const double disk = std::numbers::pi * R * R;
    CHECK(std::abs(area[0] - disk) < 2 * h);
    CHECK(std::abs(area[1] - (4 - disk) / 2) < 2 * h);
    CHECK(std::abs(area[2] - (4 - disk) / 2) < 2 * h);

    const auto again = assign_regions(dp, PartitionSpec::disk_plus_halves({0, 0}, R, {0, 0}, {-0.95, 0}, {0.95, 0}));
    CHECK(again.regions() == dp.regions());
  }

  TEST_CASE("empty region is a configuration error") {
    const auto sq = build_square_mesh(-1, 1, -1, 1, 2);
    const auto tiny = PartitionSpec::disk_plus_halves({0.1, 0.1}, 0.05, {0.1, 0.1}, {-0.95, 0}, {0.95, 0});
    CHECK_THROWS_AS(assign_regions(sq, tiny), ConfigError);
  }

  TEST_CASE("partition validation") {
    CHECK_NOTHROW(PartitionSpec::quadrants({0, 0}, 0.9).validate());
    auto bad = PartitionSpec::half_plane(0, 0.0, {0.5, 0}, {0.95, 0});
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    auto on_line = PartitionSpec::half_plane(0, 0.0, {0.0, 0}, {0.95, 0});
    CHECK_THROWS_AS(on_line.validate(), ConfigError);
  }

  TEST_CASE("generated meshes are manifold with closed boundary loops") {
    check_topology(build_square_mesh(-1, 1, -1, 1, 5));
    check_topology(build_disk_mesh({0, 0}, 1.0, 6));
    check_topology(refine_uniform(build_square_mesh(0, 2, 0, 1, 3)));
  }

  TEST_CASE("mesh io round trip") {
    const auto m = assign_regions(refine_uniform(build_disk_mesh({0, 0}, 1.0, 3)),
                                  PartitionSpec::half_plane(1, 0.0, {0, -0.5}, {0, 0.5}));
    std::stringstream ss;
    write_mesh(m, ss);
    const auto r = read_mesh(ss);
    CHECK(r.num_nodes() == m.num_nodes());
    CHECK(r.triangles() == m.triangles());
    CHECK(r.regions() == m.regions());
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      CHECK(r.nodes()[i].x == m.nodes()[i].x);
      CHECK(r.nodes()[i].y == m.nodes()[i].y);
    }
    REQUIRE(r.circle().has_value());
    CHECK(r.circle()->radius == 1.0);
  }

  TEST_CASE("mesh io errors") {
    std::stringstream bad_index("tri-mesh v1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7 0\nboundary 0\n");
    try {
      read_mesh(bad_index);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 7);
    }
    std::stringstream empty("tri-mesh v1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 0\nboundary 0\n");
    CHECK_THROWS_AS(read_mesh(empty), ValidationError);
    std::stringstream header("tri-mesh v2\n");
    CHECK_THROWS_AS(read_mesh(header), ParseError);
  }

  TEST_CASE("locate") {
    const auto m = build_square_mesh(-1, 1, -1, 1, 4);
    const int t = m.locate({0.3, -0.7});
    REQUIRE(t >= 0);
    CHECK(m.locate({2.0, 0.0}) == -1);
  }
}
