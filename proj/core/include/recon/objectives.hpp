#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/forward.hpp"

namespace recon {

/// Misfit functional driving a reconstruction.
enum class Method { ccbm, kv, td, tn };

std::string_view to_string(Method m);
/// Accepts "ccbm", "kv", "td", "tn"; throws ConfigError otherwise.
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::ccbm, Method::kv, Method::td, Method::tn};

struct Weights {
  double w0 = 1.0;   // L2 weight of the CCBM misfit
  double w1 = 1.0;   // H1-seminorm weight of the CCBM misfit
  double rho = 0.0;  // Tikhonov parameter
};

struct CostBreakdown {
  double misfit = 0.0;
  double regularization = 0.0;
  double total = 0.0;
};

/// P0 gradient density, one value per triangle.
using GradientDensity = Eigen::VectorXd;

/// ||alpha||_0^2 = sum_T alpha_T^2 |T|.
double coefficient_l2_squared(const TriMesh& mesh, const CoefficientField& alpha);
/// 1/2 rho ||alpha||_0^2.
double tikhonov(const TriMesh& mesh, const CoefficientField& alpha, double rho);
/// Area-weighted inner product of two P0 fields.
double l2_inner(const TriMesh& mesh, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Cost and, on request, gradient of one method at one coefficient.
struct Evaluation {
  CostBreakdown cost;
  /// Misfit part of the gradient density (empty unless requested).
  GradientDensity misfit_density;
  /// misfit_density + rho * alpha (empty unless requested).
  GradientDensity density;
  StateBundle states;
};

/// Evaluates one functional. Gradients with nonzero advection throw
/// NotImplementedError; solver failures propagate as SolverError.
Evaluation evaluate(Method method, const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                    const CauchyData& cauchy, const Weights& weights, bool with_gradient);

CostBreakdown cost(Method method, const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                   const CauchyData& cauchy, const Weights& weights);
GradientDensity gradient(Method method, const TriMesh& mesh, const CoefficientField& alpha,
                         const ScalarData& data, const CauchyData& cauchy, const Weights& weights);

/// CCBM: misfit = 1/2 (w0 ||u_i||_0^2 + w1 ||grad u_i||_0^2).
CostBreakdown cost_ccbm(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                        const CauchyData& cauchy, const Weights& weights);
GradientDensity grad_ccbm(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                          const CauchyData& cauchy, const Weights& weights);
/// Kohn-Vogelius: misfit = 1/2 int alpha |grad e|^2 + 1/2 int_Gamma e^2, e = u_D - u_N.
CostBreakdown cost_kv(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                      const CauchyData& cauchy, const Weights& weights);
GradientDensity grad_kv(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                        const CauchyData& cauchy, const Weights& weights);
/// Dirichlet tracking: misfit = 1/2 ||u_N - f||_Gamma^2.
CostBreakdown cost_td(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                      const CauchyData& cauchy, const Weights& weights);
GradientDensity grad_td(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                        const CauchyData& cauchy, const Weights& weights);
/// Neumann tracking: misfit = 1/2 ||alpha d_n u_D - g||_Gamma^2 with the weakly recovered flux.
CostBreakdown cost_tn(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                      const CauchyData& cauchy, const Weights& weights);
GradientDensity grad_tn(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                        const CauchyData& cauchy, const Weights& weights);

/// Boundary-ordered nodal flux alpha d_n u recovered from
/// <alpha d_n u, phi> = a(u, phi) - (Q, phi) through the boundary mass matrix.
Eigen::VectorXd recover_boundary_flux(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                      const RealNodalField& u);

struct ErrorMetrics {
  double l2_error = 0.0;
  double relative_l2 = 0.0;
  /// Area-weighted region means of the reconstruction and of the exact coefficient.
  std::vector<double> region_values;
  std::vector<double> region_exact;
  std::vector<double> abs_errors;
  std::vector<double> rel_errors;
  double avg_abs_error = 0.0;
  double avg_rel_error = 0.0;
};

/// Per-region errors of given region values; throws ArgumentError on a size mismatch.
ErrorMetrics region_errors(std::span<const double> values, std::span<const double> exact);

/// Errors of alpha against alpha_star, with regions taken from the mesh's
/// region ids. Throws ArgumentError if the partition's region count differs
/// from the mesh's.
ErrorMetrics error_metrics(const CoefficientField& alpha, const CoefficientField& alpha_star, const TriMesh& mesh,
                           const PartitionSpec& partition);
/// Same, trusting the mesh's region ids.
ErrorMetrics error_metrics(const CoefficientField& alpha, const CoefficientField& alpha_star, const TriMesh& mesh);

}  // namespace recon
