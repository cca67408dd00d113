#include "recon/fem.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "recon/errors.hpp"

namespace recon {

namespace {

using Triplet = Eigen::Triplet<double>;

RealMatrix from_triplets(Eigen::Index n, const std::vector<Triplet>& triplets) {
  RealMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

Eigen::Index num_nodes(const TriMesh& mesh) { return static_cast<Eigen::Index>(mesh.num_nodes()); }

}  // namespace

// -- fields and data --------------------------------------------------------

CoefficientField CoefficientField::constant(const TriMesh& mesh, double value) {
  return CoefficientField(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh.num_triangles()), value));
}

CoefficientField CoefficientField::from_function(const TriMesh& mesh, const ScalarFunction& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) v[static_cast<Eigen::Index>(t)] = f(mesh.centroid(t));
  return CoefficientField(std::move(v));
}

CoefficientField CoefficientField::from_regions(const TriMesh& mesh, std::span<const double> region_values) {
  if (static_cast<int>(region_values.size()) < mesh.region_count()) {
    throw ArgumentError("mesh has " + std::to_string(mesh.region_count()) + " regions but only " +
                        std::to_string(region_values.size()) + " values were given");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    v[static_cast<Eigen::Index>(t)] = region_values[static_cast<std::size_t>(mesh.regions()[t])];
  }
  return CoefficientField(std::move(v));
}

ScalarData ScalarData::make(const TriMesh& mesh, Eigen::Vector2d b, double c, const ScalarFunction& q) {
  ScalarData d;
  if (b.squaredNorm() > 0.0) d.advection.assign(mesh.num_triangles(), b);
  d.reaction = Eigen::VectorXd::Constant(num_nodes(mesh), c);
  d.source = interpolate(mesh, q);
  return d;
}

ScalarData ScalarData::make(const TriMesh& mesh, Eigen::Vector2d b, double c, double q) {
  return make(mesh, b, c, [q](Point) { return q; });
}

bool ScalarData::has_advection() const {
  for (const auto& b : advection) {
    if (b.squaredNorm() > 0.0) return true;
  }
  return false;
}

bool ScalarData::reaction_vanishes() const { return reaction.size() == 0 || reaction.cwiseAbs().maxCoeff() == 0.0; }

std::optional<std::string> coercivity_violation(const TriMesh& mesh, const ScalarData& data, double alpha_min) {
  if (!(alpha_min > 0.0)) return "alpha_min must be positive";
  if (data.reaction.size() != num_nodes(mesh)) return "reaction field has the wrong size";
  if (data.reaction.minCoeff() < alpha_min) return "reaction c falls below alpha_min";
  if (!data.has_advection()) return std::nullopt;

  // Outward normals are oriented away from the owning triangle's third vertex.
  std::unordered_map<std::uint64_t, std::pair<std::size_t, int>> owner;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) owner[key(tri[k], tri[(k + 1) % 3])] = {t, tri[(k + 2) % 3]};
  }
  for (const auto& e : mesh.boundary_edges()) {
    const auto [t, third] = owner.at(key(e.nodes[0], e.nodes[1]));
    const Point& p = mesh.node(e.nodes[0]);
    const Point& q = mesh.node(e.nodes[1]);
    const Point& r = mesh.node(third);
    Eigen::Vector2d n(q.y - p.y, -(q.x - p.x));
    if (n.dot(Eigen::Vector2d(r.x - p.x, r.y - p.y)) > 0.0) n = -n;
    if (data.advection[t].dot(n) < 0.0) return "advection has b.n < 0 on the boundary";
  }
  return std::nullopt;
}

ElementGeometry element_geometry(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangle(t);
  const Point& a = mesh.node(tri[0]);
  const Point& b = mesh.node(tri[1]);
  const Point& c = mesh.node(tri[2]);
  const double area = mesh.area(t);
  const double s = 1.0 / (2.0 * area);
  return {area,
          {Eigen::Vector2d((b.y - c.y) * s, (c.x - b.x) * s),
           Eigen::Vector2d((c.y - a.y) * s, (a.x - c.x) * s),
           Eigen::Vector2d((a.y - b.y) * s, (b.x - a.x) * s)}};
}

std::vector<Eigen::Vector2d> cell_gradients(const TriMesh& mesh, const Eigen::VectorXd& field) {
  std::vector<Eigen::Vector2d> out(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    out[t] = field[tri[0]] * g.grad[0] + field[tri[1]] * g.grad[1] + field[tri[2]] * g.grad[2];
  }
  return out;
}

Eigen::VectorXd interpolate(const TriMesh& mesh, const ScalarFunction& f) {
  Eigen::VectorXd v(num_nodes(mesh));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f(mesh.node(static_cast<int>(i)));
  return v;
}

Eigen::VectorXd sample_boundary(const TriMesh& mesh, const ScalarFunction& f) {
  const auto& bn = mesh.boundary_nodes();
  Eigen::VectorXd v(static_cast<Eigen::Index>(bn.size()));
  for (std::size_t k = 0; k < bn.size(); ++k) v[static_cast<Eigen::Index>(k)] = f(mesh.node(bn[k]));
  return v;
}

Eigen::VectorXd boundary_to_nodal(const TriMesh& mesh, const Eigen::VectorXd& boundary_values) {
  const auto& bn = mesh.boundary_nodes();
  if (static_cast<std::size_t>(boundary_values.size()) != bn.size()) {
    throw ArgumentError("boundary vector has " + std::to_string(boundary_values.size()) + " entries for " +
                        std::to_string(bn.size()) + " boundary nodes");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_nodes(mesh));
  for (std::size_t k = 0; k < bn.size(); ++k) v[bn[k]] = boundary_values[static_cast<Eigen::Index>(k)];
  return v;
}

// -- assembly ---------------------------------------------------------------

RealMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientField& alpha) {
  if (alpha.size() != mesh.num_triangles()) throw ArgumentError("coefficient size does not match triangle count");
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_triangles() * 9);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    const double w = alpha[t] * g.area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], w * g.grad[i].dot(g.grad[j]));
    }
  }
  return from_triplets(num_nodes(mesh), trip);
}

RealMatrix assemble_stiffness(const TriMesh& mesh) {
  return assemble_stiffness(mesh, CoefficientField::constant(mesh, 1.0));
}

RealMatrix assemble_mass(const TriMesh& mesh, const Eigen::VectorXd& c) {
  if (c.size() != num_nodes(mesh)) throw ArgumentError("reaction field size does not match node count");
  // Exact integral of c phi_i phi_j for P1 c: int phi_i phi_j phi_k = 2A a!b!c!/(a+b+c+2)!
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_triangles() * 9);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const double a = mesh.area(t);
    const double csum = c[tri[0]] + c[tri[1]] + c[tri[2]];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double v;
        if (i == j) {
          v = a * (2.0 * c[tri[i]] + csum) / 30.0;  // A/10 c_i + A/30 (sum of the others)
        } else {
          const int k = 3 - i - j;
          v = a * (2.0 * c[tri[i]] + 2.0 * c[tri[j]] + c[tri[k]]) / 60.0;
        }
        trip.emplace_back(tri[i], tri[j], v);
      }
    }
  }
  return from_triplets(num_nodes(mesh), trip);
}

RealMatrix assemble_mass(const TriMesh& mesh, double c) {
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_triangles() * 9);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const double a = c * mesh.area(t) / 12.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], i == j ? 2.0 * a : a);
    }
  }
  return from_triplets(num_nodes(mesh), trip);
}

RealMatrix assemble_boundary_mass(const TriMesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_boundary_edges() * 4);
  for (const auto& e : mesh.boundary_edges()) {
    const double len = mesh.edge_length(e);
    const auto [a, b] = e.nodes;
    trip.emplace_back(a, a, len / 3.0);
    trip.emplace_back(b, b, len / 3.0);
    trip.emplace_back(a, b, len / 6.0);
    trip.emplace_back(b, a, len / 6.0);
  }
  return from_triplets(num_nodes(mesh), trip);
}

RealMatrix assemble_convection(const TriMesh& mesh, const std::vector<Eigen::Vector2d>& b) {
  if (b.empty()) return RealMatrix(num_nodes(mesh), num_nodes(mesh));
  if (b.size() != mesh.num_triangles()) throw ArgumentError("advection field size does not match triangle count");
  std::vector<Triplet> trip;
  trip.reserve(mesh.num_triangles() * 9);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int j = 0; j < 3; ++j) {
      const double v = b[t].dot(g.grad[j]) * g.area / 3.0;
      for (int i = 0; i < 3; ++i) trip.emplace_back(tri[i], tri[j], v);
    }
  }
  return from_triplets(num_nodes(mesh), trip);
}

Eigen::VectorXd assemble_load(const TriMesh& mesh, const Eigen::VectorXd& q) {
  if (q.size() != num_nodes(mesh)) throw ArgumentError("source field size does not match node count");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_nodes(mesh));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const double a = mesh.area(t) / 12.0;
    const double s = q[tri[0]] + q[tri[1]] + q[tri[2]];
    for (int i = 0; i < 3; ++i) f[tri[i]] += a * (q[tri[i]] + s);
  }
  return f;
}

Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, std::span<const int> nodes,
                                       const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != nodes.size()) {
    throw ArgumentError("boundary node list and value list differ in length");
  }
  Eigen::VectorXd h = Eigen::VectorXd::Zero(num_nodes(mesh));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const int v = nodes[k];
    if (v < 0 || v >= num_nodes(mesh) || !mesh.is_boundary_node(v)) {
      throw ArgumentError("boundary value supplied on non-boundary node " + std::to_string(v));
    }
    h[v] = values[static_cast<Eigen::Index>(k)];
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_nodes(mesh));
  for (const auto& e : mesh.boundary_edges()) {
    const double len = mesh.edge_length(e);
    const auto [a, b] = e.nodes;
    f[a] += len * (2.0 * h[a] + h[b]) / 6.0;
    f[b] += len * (h[a] + 2.0 * h[b]) / 6.0;
  }
  return f;
}

Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, const Eigen::VectorXd& boundary_values) {
  return assemble_boundary_load(mesh, mesh.boundary_nodes(), boundary_values);
}

Eigen::VectorXd assemble_cell_load(const TriMesh& mesh, const Eigen::VectorXd& d) {
  if (static_cast<std::size_t>(d.size()) != mesh.num_triangles()) {
    throw ArgumentError("cell field size does not match triangle count");
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_nodes(mesh));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double v = d[static_cast<Eigen::Index>(t)] * mesh.area(t) / 3.0;
    for (int i : mesh.triangle(t)) f[i] += v;
  }
  return f;
}

RealMatrix assemble_real_operator(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data) {
  RealMatrix a = assemble_stiffness(mesh, alpha) + assemble_mass(mesh, data.reaction);
  if (data.has_advection()) a += assemble_convection(mesh, data.advection);
  return a;
}

ComplexMatrix assemble_ccbm_matrix(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data) {
  const RealMatrix real = assemble_real_operator(mesh, alpha, data);
  const RealMatrix imag = assemble_boundary_mass(mesh);
  ComplexMatrix a = real.cast<Complex>() + Complex(0.0, 1.0) * imag.cast<Complex>();
  a.makeCompressed();
  return a;
}

ComplexMatrix assemble_ccbm_adjoint_matrix(const TriMesh& mesh, const CoefficientField& alpha,
                                           const ScalarData& data) {
  RealMatrix real = assemble_stiffness(mesh, alpha) + assemble_mass(mesh, data.reaction);
  if (data.has_advection()) {
    // (p, b.grad v): row = test v, column = trial p.
    std::vector<Triplet> trip;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto g = element_geometry(mesh, t);
      const auto& tri = mesh.triangle(t);
      for (int i = 0; i < 3; ++i) {
        const double v = data.advection[t].dot(g.grad[i]) * g.area / 3.0;
        for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], v);
      }
    }
    real += from_triplets(num_nodes(mesh), trip);
  }
  const RealMatrix imag = assemble_boundary_mass(mesh);
  ComplexMatrix a = real.cast<Complex>() - Complex(0.0, 1.0) * imag.cast<Complex>();
  a.makeCompressed();
  return a;
}

// -- solves -----------------------------------------------------------------

template <typename Scalar>
void SparseSolver<Scalar>::factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw SolverError("system matrix is not square");
  matrix_ = a;
  matrix_.makeCompressed();
  auto lu = std::make_shared<LU>();
  lu->analyzePattern(matrix_);
  lu->factorize(matrix_);
  if (lu->info() != Eigen::Success) {
    lu_.reset();
    throw SolverError("sparse LU factorization failed (" + lu->lastErrorMessage() + ")");
  }
  lu_ = std::move(lu);
}

template <typename Scalar>
typename SparseSolver<Scalar>::Vector SparseSolver<Scalar>::solve(const Vector& rhs) const {
  if (!lu_) throw SolverError("solve called without a valid factorization");
  if (rhs.size() != matrix_.rows()) throw ArgumentError("right-hand side has the wrong dimension");
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Vector::Zero(rhs.size());
  const LU& lu = *lu_;
  Vector x = lu.solve(rhs);
  Vector r = rhs - matrix_ * x;
  double rel = r.norm() / bnorm;
  for (int pass = 0; pass < 2 && !(rel <= kSolverTolerance); ++pass) {
    x += lu.solve(r);
    r = rhs - matrix_ * x;
    rel = r.norm() / bnorm;
  }
  if (!(rel <= kSolverTolerance)) {
    std::ostringstream msg;
    msg << "relative residual " << rel << " exceeds " << kSolverTolerance << " (n = " << matrix_.rows() << ")";
    throw SolverError(msg.str());
  }
  return x;
}

template class SparseSolver<double>;
template class SparseSolver<Complex>;

template <typename Scalar>
typename DirichletReduction<Scalar>::Vector DirichletReduction<Scalar>::expand(const Vector& free_solution) const {
  Vector full = prescribed;
  for (std::size_t k = 0; k < free_nodes.size(); ++k) full[free_nodes[k]] = free_solution[static_cast<Eigen::Index>(k)];
  return full;
}

template <typename Scalar>
typename DirichletReduction<Scalar>::Vector DirichletReduction<Scalar>::solve() const {
  if (free_nodes.empty()) return prescribed;
  return expand(solve_sparse(reduced));
}

template <typename Scalar>
DirichletReduction<Scalar> apply_dirichlet(const SparseSystem<Scalar>& system, std::span<const int> nodes,
                                           const typename SparseSystem<Scalar>::Vector& values) {
  using Vector = typename SparseSystem<Scalar>::Vector;
  const Eigen::Index n = system.dimension();
  if (static_cast<std::size_t>(values.size()) != nodes.size()) {
    throw ArgumentError("Dirichlet node list and value list differ in length");
  }
  DirichletReduction<Scalar> out;
  out.prescribed = Vector::Zero(n);
  std::vector<char> constrained(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= n) throw ArgumentError("Dirichlet node out of range");
    constrained[static_cast<std::size_t>(nodes[k])] = 1;
    out.prescribed[nodes[k]] = values[static_cast<Eigen::Index>(k)];
  }
  out.full_to_free.assign(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!constrained[static_cast<std::size_t>(i)]) {
      out.full_to_free[static_cast<std::size_t>(i)] = static_cast<int>(out.free_nodes.size());
      out.free_nodes.push_back(static_cast<int>(i));
    }
  }
  const auto m = static_cast<Eigen::Index>(out.free_nodes.size());
  Vector rhs(m);
  for (Eigen::Index k = 0; k < m; ++k) rhs[k] = system.rhs[out.free_nodes[static_cast<std::size_t>(k)]];

  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(system.matrix.nonZeros()));
  Eigen::SparseMatrix<Scalar> a = system.matrix;
  a.makeCompressed();
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(a, col); it; ++it) {
      const int fi = out.full_to_free[static_cast<std::size_t>(it.row())];
      if (fi < 0) continue;
      const int fj = out.full_to_free[static_cast<std::size_t>(it.col())];
      if (fj >= 0) {
        trip.emplace_back(fi, fj, it.value());
      } else {
        rhs[fi] -= it.value() * out.prescribed[it.col()];
      }
    }
  }
  out.reduced.matrix.resize(m, m);
  out.reduced.matrix.setFromTriplets(trip.begin(), trip.end());
  out.reduced.matrix.makeCompressed();
  out.reduced.rhs = std::move(rhs);
  return out;
}

template struct DirichletReduction<double>;
template struct DirichletReduction<Complex>;
template DirichletReduction<double> apply_dirichlet(const SparseSystem<double>&, std::span<const int>,
                                                    const Eigen::VectorXd&);
template DirichletReduction<Complex> apply_dirichlet(const SparseSystem<Complex>&, std::span<const int>,
                                                     const Eigen::VectorXcd&);

Eigen::VectorXd solve_neumann_mean_zero(const RealSystem& system, const TriMesh& mesh) {
  const Eigen::Index n = system.dimension();
  if (n != num_nodes(mesh)) throw ArgumentError("system dimension does not match mesh");
  const Eigen::VectorXd m = assemble_boundary_mass(mesh) * Eigen::VectorXd::Ones(n);

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(system.matrix.nonZeros() + 2 * n));
  for (Eigen::Index col = 0; col < system.matrix.outerSize(); ++col) {
    for (RealMatrix::InnerIterator it(system.matrix, col); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m[i] != 0.0) {
      trip.emplace_back(i, n, m[i]);
      trip.emplace_back(n, i, m[i]);
    }
  }
  RealSystem augmented;
  augmented.matrix = from_triplets(n + 1, trip);
  augmented.rhs = Eigen::VectorXd::Zero(n + 1);
  augmented.rhs.head(n) = system.rhs;
  const Eigen::VectorXd x = solve_sparse(augmented);
  return x.head(n);
}

// -- norms ------------------------------------------------------------------

Norms norms(const Eigen::VectorXd& u, const TriMesh& mesh) {
  if (u.size() != num_nodes(mesh)) throw ArgumentError("field size does not match node count");
  Norms out;
  const double l2sq = u.dot(assemble_mass(mesh) * u);
  const double semisq = u.dot(assemble_stiffness(mesh) * u);
  const double bsq = u.dot(assemble_boundary_mass(mesh) * u);
  out.l2 = std::sqrt(std::max(l2sq, 0.0));
  out.h1_semi = std::sqrt(std::max(semisq, 0.0));
  out.h1 = std::sqrt(std::max(l2sq + semisq, 0.0));
  out.boundary_l2 = std::sqrt(std::max(bsq, 0.0));
  return out;
}

Norms norms(const Eigen::VectorXcd& u, const TriMesh& mesh) {
  const Norms re = norms(Eigen::VectorXd(u.real()), mesh);
  const Norms im = norms(Eigen::VectorXd(u.imag()), mesh);
  auto comb = [](double a, double b) { return std::sqrt(a * a + b * b); };
  return {comb(re.l2, im.l2), comb(re.h1_semi, im.h1_semi), comb(re.h1, im.h1), comb(re.boundary_l2, im.boundary_l2)};
}

}  // namespace recon
