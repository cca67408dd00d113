#pragma once

// Test-side oracles that do not share code with the library: dense
// elimination, element integrals from textbook formulas, a hand-rolled
// generator and finite differences.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "recon/mesh.hpp"

namespace oracle {

/// xorshift64* generator used by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545f4914f6cdd1dULL;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  Eigen::VectorXd vector(Eigen::Index n, double a, double b) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }

 private:
  std::uint64_t s_;
};

/// Gaussian elimination with partial pivoting.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dense_solve(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
                                                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    }
    a.row(k).swap(a.row(p));
    std::swap(b[k], b[p]);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Scalar f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Scalar s = b[i];
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline double signed_area(const recon::Point& a, const recon::Point& b, const recon::Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

/// Dense P1 stiffness with per-triangle coefficient, from the
/// (b_i b_j + c_i c_j) / (4A) formula.
inline Eigen::MatrixXd dense_stiffness(const recon::TriMesh& m, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<Eigen::Index>(m.num_nodes());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const recon::Point p[3] = {m.node(tri[0]), m.node(tri[1]), m.node(tri[2])};
    const double area = signed_area(p[0], p[1], p[2]);
    double bb[3], cc[3];
    for (int i = 0; i < 3; ++i) {
      bb[i] = p[(i + 1) % 3].y - p[(i + 2) % 3].y;
      cc[i] = p[(i + 2) % 3].x - p[(i + 1) % 3].x;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        k(tri[i], tri[j]) += alpha[static_cast<Eigen::Index>(t)] * (bb[i] * bb[j] + cc[i] * cc[j]) / (4.0 * area);
      }
    }
  }
  return k;
}

inline Eigen::MatrixXd dense_mass(const recon::TriMesh& m) {
  const auto n = static_cast<Eigen::Index>(m.num_nodes());
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    const double area = signed_area(m.node(tri[0]), m.node(tri[1]), m.node(tri[2]));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) mm(tri[i], tri[j]) += area / 12.0 * (i == j ? 2.0 : 1.0);
    }
  }
  return mm;
}

inline Eigen::MatrixXd dense_boundary_mass(const recon::TriMesh& m) {
  const auto n = static_cast<Eigen::Index>(m.num_nodes());
  Eigen::MatrixXd mb = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : m.boundary_edges()) {
    const auto& a = m.node(e.nodes[0]);
    const auto& b = m.node(e.nodes[1]);
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    mb(e.nodes[0], e.nodes[0]) += len / 3.0;
    mb(e.nodes[1], e.nodes[1]) += len / 3.0;
    mb(e.nodes[0], e.nodes[1]) += len / 6.0;
    mb(e.nodes[1], e.nodes[0]) += len / 6.0;
  }
  return mb;
}

inline Eigen::VectorXd nodal(const recon::TriMesh& m, double (*f)(double, double)) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.num_nodes()));
  for (std::size_t i = 0; i < m.num_nodes(); ++i) v[static_cast<Eigen::Index>(i)] = f(m.nodes()[i].x, m.nodes()[i].y);
  return v;
}

/// ||u_h - u||_0 with a degree-5 seven-point rule on each triangle.
template <class F>
double l2_error_quadrature(const recon::TriMesh& m, const Eigen::VectorXd& uh, F&& exact) {
  constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
  constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
  const double pts[7][4] = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225}, {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
                            {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2}};
  double sum = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    for (const auto& q : pts) {
      recon::Point p{0.0, 0.0};
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        p.x += q[k] * m.node(tri[k]).x;
        p.y += q[k] * m.node(tri[k]).y;
        v += q[k] * uh[tri[k]];
      }
      const double e = v - exact(p);
      sum += q[3] * m.area(t) * e * e;
    }
  }
  return std::sqrt(sum);
}

/// Best relative mismatch between `analytic` and central differences of f
/// over a sweep of step sizes.
template <class F>
double fd_mismatch(F&& f, double analytic, std::initializer_list<double> steps = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
  double best = INFINITY;
  for (double h : steps) {
    const double fd = (f(h) - f(-h)) / (2.0 * h);
    best = std::min(best, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300));
  }
  return best;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("recon_test_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
