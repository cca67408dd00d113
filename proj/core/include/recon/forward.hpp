#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "recon/fem.hpp"

namespace recon {

/// Boundary measurements: Dirichlet trace f and Neumann flux g at the
/// boundary nodes of the inversion mesh (ordered like mesh.boundary_nodes()).
struct CauchyData {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

/// CCBM state: solves a(u, v) + i<u, v> = (Q, v) + <g, v> + i<f, v>.
ComplexNodalField solve_ccbm_state(const TriMesh& mesh, const CoefficientField& alpha,
                                   const ScalarData& data, const CauchyData& cauchy);

/// Dirichlet problem with trace f (boundary-ordered values).
RealNodalField solve_dirichlet_state(const TriMesh& mesh, const CoefficientField& alpha,
                                     const ScalarData& data, const Eigen::VectorXd& f);

/// Neumann problem alpha du/dn = g. With c = 0 and b = 0 the solution is
/// normalized to zero boundary mean and the data must be compatible
/// (WellPosednessError otherwise).
RealNodalField solve_neumann_state(const TriMesh& mesh, const CoefficientField& alpha,
                                   const ScalarData& data, const Eigen::VectorXd& g);

/// CCBM adjoint: B*(p, v) = w0 (u_i, v) + w1 (grad u_i, grad v).
ComplexNodalField solve_ccbm_adjoint(const TriMesh& mesh, const CoefficientField& alpha,
                                     const ScalarData& data, const RealNodalField& u_imag,
                                     double w0, double w1);

/// State and adjoint fields of one forward/adjoint evaluation.
struct StateBundle {
  ComplexNodalField u;
  RealNodalField u_dirichlet;
  RealNodalField u_neumann;
  ComplexNodalField p;
  CoefficientField alpha;
};

struct SynthesisOptions {
  /// Permit a fine mesh that is not at least two uniform refinements finer
  /// than the inversion mesh. Only meant for tests.
  bool allow_inverse_crime = false;
};

struct SynthesisResult {
  CauchyData cauchy;
  /// max |u*| over the fine-mesh nodes; scale of the noise model.
  double state_sup = 0.0;
  RealNodalField fine_state;
};

/// Solves the Neumann problem with alpha* on the fine mesh, takes its
/// Dirichlet trace, and transfers it to the coarse boundary nodes by linear
/// interpolation along the fine boundary polyline. g is sampled from g_input
/// at the coarse boundary nodes.
SynthesisResult synthesize_cauchy_data(const CoefficientField& alpha_star_fine, const ScalarData& fine_data,
                                       const ScalarFunction& g_input, const TriMesh& fine_mesh,
                                       const TriMesh& coarse_mesh, SynthesisOptions options = {});

/// Interpolates a boundary-ordered fine trace onto the coarse boundary nodes.
Eigen::VectorXd transfer_boundary_trace(const TriMesh& fine_mesh, const Eigen::VectorXd& fine_trace,
                                        const TriMesh& coarse_mesh);

/// f_noisy(x_k) = (1 + delta * eta_k) f(x_k), eta_k ~ N(0, state_sup^2)
/// drawn from CounterNormal(seed). g is left untouched.
CauchyData add_noise(const CauchyData& cauchy, double state_sup, double delta, std::uint64_t seed);

/// "node_index,x,y,f,g" with a header row.
void write_measurement_csv(const TriMesh& mesh, const CauchyData& cauchy, std::ostream& out);
void write_measurement_csv(const TriMesh& mesh, const CauchyData& cauchy, const std::string& path);

}  // namespace recon
