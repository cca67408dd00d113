#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recon/mesh.hpp"

namespace recon {

using Complex = std::complex<double>;
using RealMatrix = Eigen::SparseMatrix<double>;
using ComplexMatrix = Eigen::SparseMatrix<Complex>;
using RealNodalField = Eigen::VectorXd;
using ComplexNodalField = Eigen::VectorXcd;
using ScalarFunction = std::function<double(Point)>;

/// Piecewise-constant (P0) diffusion coefficient, one value per triangle.
struct CoefficientField {
  Eigen::VectorXd values;

  CoefficientField() = default;
  explicit CoefficientField(Eigen::VectorXd v) : values(std::move(v)) {}

  static CoefficientField constant(const TriMesh& mesh, double value);
  /// Samples f at triangle centroids.
  static CoefficientField from_function(const TriMesh& mesh, const ScalarFunction& f);
  /// One value per mesh region id.
  static CoefficientField from_regions(const TriMesh& mesh, std::span<const double> region_values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t t) const { return values[static_cast<Eigen::Index>(t)]; }
  double& operator[](std::size_t t) { return values[static_cast<Eigen::Index>(t)]; }
  double min() const { return values.minCoeff(); }
};

/// Lower-order PDE data: advection b (per triangle), reaction c and source Q
/// (both nodal, i.e. P1 interpolants).
struct ScalarData {
  std::vector<Eigen::Vector2d> advection;  // empty means b = 0
  Eigen::VectorXd reaction;
  Eigen::VectorXd source;

  static ScalarData make(const TriMesh& mesh, Eigen::Vector2d b, double c, const ScalarFunction& q);
  static ScalarData make(const TriMesh& mesh, Eigen::Vector2d b, double c, double q);

  bool has_advection() const;
  bool reaction_vanishes() const;
};

/// Returns a description of the first violated coercivity hypothesis
/// (b.n >= 0 on the boundary, c - div(b)/2 >= alpha_min with constant b),
/// or nullopt when the data satisfies them.
std::optional<std::string> coercivity_violation(const TriMesh& mesh, const ScalarData& data,
                                                double alpha_min);

/// Area and the (constant) gradients of the three P1 hat functions on a triangle.
struct ElementGeometry {
  double area;
  std::array<Eigen::Vector2d, 3> grad;
};
ElementGeometry element_geometry(const TriMesh& mesh, std::size_t t);

/// Per-triangle gradient of a P1 field.
std::vector<Eigen::Vector2d> cell_gradients(const TriMesh& mesh, const Eigen::VectorXd& field);

/// Nodal interpolant of f.
Eigen::VectorXd interpolate(const TriMesh& mesh, const ScalarFunction& f);

/// Values of f at mesh.boundary_nodes(), in that order.
Eigen::VectorXd sample_boundary(const TriMesh& mesh, const ScalarFunction& f);

/// Scatters boundary-ordered values into a full nodal vector (zeros elsewhere).
Eigen::VectorXd boundary_to_nodal(const TriMesh& mesh, const Eigen::VectorXd& boundary_values);

// -- assembly ---------------------------------------------------------------

RealMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientField& alpha);
/// Stiffness with alpha = 1.
RealMatrix assemble_stiffness(const TriMesh& mesh);
RealMatrix assemble_mass(const TriMesh& mesh, const Eigen::VectorXd& c_nodal);
RealMatrix assemble_mass(const TriMesh& mesh, double c = 1.0);
RealMatrix assemble_boundary_mass(const TriMesh& mesh);
/// Entry (i, j) = (b . grad phi_j, phi_i).
RealMatrix assemble_convection(const TriMesh& mesh, const std::vector<Eigen::Vector2d>& b);

Eigen::VectorXd assemble_load(const TriMesh& mesh, const Eigen::VectorXd& q_nodal);
/// Boundary load <h, phi_i> for h given at the listed boundary nodes. Throws
/// ArgumentError if a listed node is not on the boundary.
Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, std::span<const int> nodes,
                                       const Eigen::VectorXd& values);
/// Same, for values ordered like mesh.boundary_nodes().
Eigen::VectorXd assemble_boundary_load(const TriMesh& mesh, const Eigen::VectorXd& boundary_values);
/// (d, phi_i) for a P0 density d, integrated exactly.
Eigen::VectorXd assemble_cell_load(const TriMesh& mesh, const Eigen::VectorXd& cell_values);

/// Real bilinear form a(u, v) = (alpha grad u, grad v) + (b.grad u, v) + (c u, v).
RealMatrix assemble_real_operator(const TriMesh& mesh, const CoefficientField& alpha,
                                  const ScalarData& data);
/// Matrix of the complex-Robin sesquilinear form a(u, v) + i<u, v>_Gamma.
ComplexMatrix assemble_ccbm_matrix(const TriMesh& mesh, const CoefficientField& alpha,
                                   const ScalarData& data);
/// Matrix of the adjoint form (alpha grad p, grad v) + (p, b.grad v) + (c p, v) - i<p, v>_Gamma.
ComplexMatrix assemble_ccbm_adjoint_matrix(const TriMesh& mesh, const CoefficientField& alpha,
                                           const ScalarData& data);

// -- linear solves ----------------------------------------------------------

template <typename Scalar>
struct SparseSystem {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Eigen::SparseMatrix<Scalar> matrix;
  Vector rhs;

  Eigen::Index dimension() const { return matrix.rows(); }
};
using RealSystem = SparseSystem<double>;
using ComplexSystem = SparseSystem<Complex>;

/// Relative residual bound every solve must meet.
inline constexpr double kSolverTolerance = 1e-10;

/// Sparse LU factorization with the residual contract enforced on every solve.
/// Solves against one factorization are safe to run concurrently only on
/// distinct instances.
template <typename Scalar>
class SparseSolver {
 public:
  using Matrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SparseSolver() = default;
  explicit SparseSolver(const Matrix& a) { factor(a); }

  /// Throws SolverError if the matrix is singular.
  void factor(const Matrix& a);
  /// Throws SolverError if the relative residual exceeds kSolverTolerance.
  Vector solve(const Vector& rhs) const;

 private:
  using LU = Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>;
  Matrix matrix_;
  std::shared_ptr<LU> lu_;
};

extern template class SparseSolver<double>;
extern template class SparseSolver<Complex>;

template <typename Scalar>
typename SparseSystem<Scalar>::Vector solve_sparse(const SparseSystem<Scalar>& system) {
  return SparseSolver<Scalar>(system.matrix).solve(system.rhs);
}

/// A system with Dirichlet rows and columns eliminated symmetrically.
template <typename Scalar>
struct DirichletReduction {
  using Vector = typename SparseSystem<Scalar>::Vector;

  SparseSystem<Scalar> reduced;
  std::vector<int> free_nodes;  // reduced index -> full index
  std::vector<int> full_to_free;  // full index -> reduced index or -1
  Vector prescribed;            // full-length, prescribed values on constrained nodes

  /// Full solution from a reduced one; constrained entries are copied exactly.
  Vector expand(const Vector& free_solution) const;
  Vector solve() const;
};

template <typename Scalar>
DirichletReduction<Scalar> apply_dirichlet(const SparseSystem<Scalar>& system,
                                           std::span<const int> nodes,
                                           const typename SparseSystem<Scalar>::Vector& values);

extern template struct DirichletReduction<double>;
extern template struct DirichletReduction<Complex>;
extern template DirichletReduction<double> apply_dirichlet(const SparseSystem<double>&,
                                                           std::span<const int>,
                                                           const Eigen::VectorXd&);
extern template DirichletReduction<Complex> apply_dirichlet(const SparseSystem<Complex>&,
                                                            std::span<const int>,
                                                            const Eigen::VectorXcd&);

/// Solves a (possibly singular) pure-Neumann system with one Lagrange
/// multiplier enforcing the discrete boundary mean 1^T M_Gamma u = 0.
Eigen::VectorXd solve_neumann_mean_zero(const RealSystem& system, const TriMesh& mesh);

// -- norms ------------------------------------------------------------------

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  double boundary_l2 = 0.0;
};

Norms norms(const Eigen::VectorXd& field, const TriMesh& mesh);
Norms norms(const Eigen::VectorXcd& field, const TriMesh& mesh);

}  // namespace recon
