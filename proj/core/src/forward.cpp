#include "recon/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "recon/errors.hpp"
#include "recon/rng.hpp"

namespace recon {

namespace {

void check_sizes(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data) {
  if (alpha.size() != mesh.num_triangles()) throw ArgumentError("coefficient size does not match triangle count");
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  if (data.reaction.size() != n || data.source.size() != n) {
    throw ArgumentError("reaction/source data size does not match node count");
  }
}

void check_boundary_size(const TriMesh& mesh, const Eigen::VectorXd& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != mesh.boundary_nodes().size()) {
    throw ArgumentError(std::string(what) + " must have one value per boundary node");
  }
}

template <typename Fn>
auto with_alpha_diagnostic(const CoefficientField& alpha, const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << what << ": " << e.what() << " [alpha min " << alpha.values.minCoeff() << ", max "
        << alpha.values.maxCoeff() << "]";
    throw SolverError(msg.str());
  }
}

}  // namespace

ComplexNodalField solve_ccbm_state(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                   const CauchyData& cauchy) {
  check_sizes(mesh, alpha, data);
  check_boundary_size(mesh, cauchy.f, "f");
  check_boundary_size(mesh, cauchy.g, "g");
  ComplexSystem sys;
  sys.matrix = assemble_ccbm_matrix(mesh, alpha, data);
  const Eigen::VectorXd real_rhs = assemble_load(mesh, data.source) + assemble_boundary_load(mesh, cauchy.g);
  const Eigen::VectorXd imag_rhs = assemble_boundary_load(mesh, cauchy.f);
  sys.rhs = real_rhs.cast<Complex>() + Complex(0.0, 1.0) * imag_rhs.cast<Complex>();
  return with_alpha_diagnostic(alpha, "CCBM state", [&] { return solve_sparse(sys); });
}

RealNodalField solve_dirichlet_state(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                     const Eigen::VectorXd& f) {
  check_sizes(mesh, alpha, data);
  check_boundary_size(mesh, f, "f");
  RealSystem sys{assemble_real_operator(mesh, alpha, data), assemble_load(mesh, data.source)};
  const auto reduction = apply_dirichlet(sys, std::span<const int>(mesh.boundary_nodes()), f);
  return with_alpha_diagnostic(alpha, "Dirichlet state", [&] { return reduction.solve(); });
}

RealNodalField solve_neumann_state(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                   const Eigen::VectorXd& g) {
  check_sizes(mesh, alpha, data);
  check_boundary_size(mesh, g, "g");
  RealSystem sys{assemble_real_operator(mesh, alpha, data),
                 assemble_load(mesh, data.source) + assemble_boundary_load(mesh, g)};
  if (data.reaction_vanishes() && !data.has_advection()) {
    const double net = sys.rhs.sum();
    const double scale = sys.rhs.cwiseAbs().sum();
    if (std::abs(net) > 1e-10 * std::max(scale, std::numeric_limits<double>::min())) {
      std::ostringstream msg;
      msg << "pure Neumann data violates compatibility: integral of Q plus integral of g = " << net;
      throw WellPosednessError(msg.str());
    }
    return with_alpha_diagnostic(alpha, "Neumann state", [&] { return solve_neumann_mean_zero(sys, mesh); });
  }
  return with_alpha_diagnostic(alpha, "Neumann state", [&] { return solve_sparse(sys); });
}

ComplexNodalField solve_ccbm_adjoint(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                     const RealNodalField& u_imag, double w0, double w1) {
  check_sizes(mesh, alpha, data);
  if (u_imag.size() != static_cast<Eigen::Index>(mesh.num_nodes())) {
    throw ArgumentError("imaginary state size does not match node count");
  }
  ComplexSystem sys;
  sys.matrix = assemble_ccbm_adjoint_matrix(mesh, alpha, data);
  const Eigen::VectorXd rhs = w0 * (assemble_mass(mesh) * u_imag) + w1 * (assemble_stiffness(mesh) * u_imag);
  sys.rhs = rhs.cast<Complex>();
  return with_alpha_diagnostic(alpha, "CCBM adjoint", [&] { return solve_sparse(sys); });
}

Eigen::VectorXd transfer_boundary_trace(const TriMesh& fine_mesh, const Eigen::VectorXd& fine_trace,
                                        const TriMesh& coarse_mesh) {
  check_boundary_size(fine_mesh, fine_trace, "fine trace");
  const auto& cnodes = coarse_mesh.boundary_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(cnodes.size()));
  for (std::size_t k = 0; k < cnodes.size(); ++k) {
    const Point p = coarse_mesh.node(cnodes[k]);
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (const auto& e : fine_mesh.boundary_edges()) {
      const Point a = fine_mesh.node(e.nodes[0]);
      const Point b = fine_mesh.node(e.nodes[1]);
      const double dx = b.x - a.x, dy = b.y - a.y;
      const double len2 = dx * dx + dy * dy;
      double s = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
      s = std::clamp(s, 0.0, 1.0);
      const double qx = a.x + s * dx - p.x, qy = a.y + s * dy - p.y;
      const double dist = qx * qx + qy * qy;
      if (dist < best) {
        best = dist;
        const double fa = fine_trace[fine_mesh.boundary_slot(e.nodes[0])];
        const double fb = fine_trace[fine_mesh.boundary_slot(e.nodes[1])];
        value = s == 0.0 ? fa : (s == 1.0 ? fb : (1.0 - s) * fa + s * fb);
      }
    }
    out[static_cast<Eigen::Index>(k)] = value;
  }
  return out;
}

SynthesisResult synthesize_cauchy_data(const CoefficientField& alpha_star_fine, const ScalarData& fine_data,
                                       const ScalarFunction& g_input, const TriMesh& fine_mesh,
                                       const TriMesh& coarse_mesh, SynthesisOptions options) {
  // Two uniform refinements multiply the triangle count by 16.
  if (!options.allow_inverse_crime && fine_mesh.num_triangles() < 16 * coarse_mesh.num_triangles()) {
    std::ostringstream msg;
    msg << "data mesh has " << fine_mesh.num_triangles() << " triangles, fewer than 16x the inversion mesh ("
        << coarse_mesh.num_triangles() << "); refine it at least twice more";
    throw InverseCrimeError(msg.str());
  }
  const Eigen::VectorXd g_fine = sample_boundary(fine_mesh, g_input);
  SynthesisResult out;
  out.fine_state = solve_neumann_state(fine_mesh, alpha_star_fine, fine_data, g_fine);
  out.state_sup = out.fine_state.cwiseAbs().maxCoeff();
  Eigen::VectorXd fine_trace(static_cast<Eigen::Index>(fine_mesh.boundary_nodes().size()));
  for (std::size_t k = 0; k < fine_mesh.boundary_nodes().size(); ++k) {
    fine_trace[static_cast<Eigen::Index>(k)] = out.fine_state[fine_mesh.boundary_nodes()[k]];
  }
  out.cauchy.f = transfer_boundary_trace(fine_mesh, fine_trace, coarse_mesh);
  out.cauchy.g = sample_boundary(coarse_mesh, g_input);
  return out;
}

CauchyData add_noise(const CauchyData& cauchy, double state_sup, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ArgumentError("noise level must be non-negative");
  CauchyData out = cauchy;
  out.noise_level = delta;
  out.seed = seed;
  if (delta == 0.0) return out;
  if (!(state_sup > 0.0)) throw ArgumentError("state sup norm must be positive");
  const CounterNormal rng(seed);
  for (Eigen::Index k = 0; k < out.f.size(); ++k) {
    const double eta = state_sup * rng.normal(static_cast<std::uint64_t>(k));
    out.f[k] = (1.0 + delta * eta) * cauchy.f[k];
  }
  return out;
}

void write_measurement_csv(const TriMesh& mesh, const CauchyData& cauchy, std::ostream& out) {
  check_boundary_size(mesh, cauchy.f, "f");
  check_boundary_size(mesh, cauchy.g, "g");
  out << "node_index,x,y,f,g\n" << std::setprecision(17);
  const auto& nodes = mesh.boundary_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Point p = mesh.node(nodes[k]);
    const auto i = static_cast<Eigen::Index>(k);
    out << nodes[k] << ',' << p.x << ',' << p.y << ',' << cauchy.f[i] << ',' << cauchy.g[i] << '\n';
  }
}

void write_measurement_csv(const TriMesh& mesh, const CauchyData& cauchy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_measurement_csv(mesh, cauchy, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace recon
