#include "recon/objectives.hpp"

#include <cmath>

#include "recon/errors.hpp"

namespace recon {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ccbm: return "ccbm";
    case Method::kv: return "kv";
    case Method::td: return "td";
    case Method::tn: return "tn";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (expected ccbm, kv, td or tn)");
}

double coefficient_l2_squared(const TriMesh& mesh, const CoefficientField& alpha) {
  return l2_inner(mesh, alpha.values, alpha.values);
}

double tikhonov(const TriMesh& mesh, const CoefficientField& alpha, double rho) {
  return 0.5 * rho * coefficient_l2_squared(mesh, alpha);
}

double l2_inner(const TriMesh& mesh, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = static_cast<Eigen::Index>(mesh.num_triangles());
  if (a.size() != n || b.size() != n) throw ArgumentError("P0 field size does not match triangle count");
  double s = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) s += a[t] * b[t] * mesh.area(static_cast<std::size_t>(t));
  return s;
}

namespace {

using Gradients = std::vector<Eigen::Vector2d>;

Eigen::VectorXd boundary_restrict(const TriMesh& mesh, const Eigen::VectorXd& nodal) {
  const auto& nodes = mesh.boundary_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) out[static_cast<Eigen::Index>(k)] = nodal[nodes[k]];
  return out;
}

/// Boundary mass restricted to boundary nodes, indexed by boundary slot.
RealMatrix boundary_block(const TriMesh& mesh) {
  const auto nb = static_cast<Eigen::Index>(mesh.boundary_nodes().size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh.boundary_edges()) {
    const double len = mesh.edge_length(e);
    const int a = mesh.boundary_slot(e.nodes[0]);
    const int b = mesh.boundary_slot(e.nodes[1]);
    trip.emplace_back(a, a, len / 3.0);
    trip.emplace_back(b, b, len / 3.0);
    trip.emplace_back(a, b, len / 6.0);
    trip.emplace_back(b, a, len / 6.0);
  }
  RealMatrix m(nb, nb);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

bool pure_neumann(const ScalarData& data) { return data.reaction_vanishes() && !data.has_advection(); }

/// Solves a(p, v) = rhs(v) for all v, with the same normalization the Neumann state uses.
Eigen::VectorXd solve_neumann_adjoint(const TriMesh& mesh, const RealMatrix& a, const ScalarData& data,
                                      const Eigen::VectorXd& rhs) {
  RealSystem sys{a, rhs};
  if (pure_neumann(data)) return solve_neumann_mean_zero(sys, mesh);
  return solve_sparse(sys);
}

/// Solves a(p, v) = rhs(v) for interior v with p = trace on the boundary.
Eigen::VectorXd solve_dirichlet_adjoint(const TriMesh& mesh, const RealMatrix& a, const Eigen::VectorXd& rhs,
                                        const Eigen::VectorXd& trace) {
  RealSystem sys{a, rhs};
  return apply_dirichlet(sys, std::span<const int>(mesh.boundary_nodes()), trace).solve();
}

void require_no_advection(const ScalarData& data) {
  if (data.has_advection()) {
    throw NotImplementedError("gradients are only derived for vanishing advection (b = 0)");
  }
}

double dot(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.dot(b); }

void finish(Evaluation& ev, const TriMesh& mesh, const CoefficientField& alpha, const Weights& w,
            bool with_gradient) {
  ev.cost.regularization = tikhonov(mesh, alpha, w.rho);
  ev.cost.total = ev.cost.misfit + ev.cost.regularization;
  ev.states.alpha = alpha;
  if (with_gradient) ev.density = ev.misfit_density + w.rho * alpha.values;
}

Evaluation evaluate_ccbm(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                         const CauchyData& cauchy, const Weights& w, bool with_gradient) {
  if (with_gradient) require_no_advection(data);
  Evaluation ev;
  ev.states.u = solve_ccbm_state(mesh, alpha, data, cauchy);
  const Eigen::VectorXd ui = ev.states.u.imag();
  const double l2sq = ui.dot(assemble_mass(mesh) * ui);
  const double semisq = ui.dot(assemble_stiffness(mesh) * ui);
  ev.cost.misfit = 0.5 * (w.w0 * l2sq + w.w1 * semisq);
  if (with_gradient) {
    ev.states.p = solve_ccbm_adjoint(mesh, alpha, data, ui, w.w0, w.w1);
    const Gradients gur = cell_gradients(mesh, ev.states.u.real());
    const Gradients gui = cell_gradients(mesh, ui);
    const Gradients gpr = cell_gradients(mesh, ev.states.p.real());
    const Gradients gpi = cell_gradients(mesh, ev.states.p.imag());
    ev.misfit_density.resize(static_cast<Eigen::Index>(mesh.num_triangles()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      ev.misfit_density[static_cast<Eigen::Index>(t)] = dot(gur[t], gpi[t]) - dot(gui[t], gpr[t]);
    }
  }
  finish(ev, mesh, alpha, w, with_gradient);
  return ev;
}

Evaluation evaluate_kv(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                       const CauchyData& cauchy, const Weights& w, bool with_gradient) {
  if (with_gradient) require_no_advection(data);
  Evaluation ev;
  ev.states.u_dirichlet = solve_dirichlet_state(mesh, alpha, data, cauchy.f);
  ev.states.u_neumann = solve_neumann_state(mesh, alpha, data, cauchy.g);
  const Eigen::VectorXd e = ev.states.u_dirichlet - ev.states.u_neumann;
  const RealMatrix k_alpha = assemble_stiffness(mesh, alpha);
  const Eigen::VectorXd ke = k_alpha * e;
  const Eigen::VectorXd me = assemble_boundary_mass(mesh) * e;
  ev.cost.misfit = 0.5 * e.dot(ke) + 0.5 * e.dot(me);
  if (with_gradient) {
    const RealMatrix a = assemble_real_operator(mesh, alpha, data);
    const Eigen::VectorXd zero_trace = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.boundary_nodes().size()));
    const Eigen::VectorXd p_d = solve_dirichlet_adjoint(mesh, a, ke, zero_trace);
    const Eigen::VectorXd p_n = solve_neumann_adjoint(mesh, a, data, ke + me);
    const Gradients ge = cell_gradients(mesh, e);
    const Gradients gud = cell_gradients(mesh, ev.states.u_dirichlet);
    const Gradients gun = cell_gradients(mesh, ev.states.u_neumann);
    const Gradients gpd = cell_gradients(mesh, p_d);
    const Gradients gpn = cell_gradients(mesh, p_n);
    ev.misfit_density.resize(static_cast<Eigen::Index>(mesh.num_triangles()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      ev.misfit_density[static_cast<Eigen::Index>(t)] =
          0.5 * ge[t].squaredNorm() - dot(gud[t], gpd[t]) + dot(gun[t], gpn[t]);
    }
  }
  finish(ev, mesh, alpha, w, with_gradient);
  return ev;
}

Evaluation evaluate_td(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                       const CauchyData& cauchy, const Weights& w, bool with_gradient) {
  if (with_gradient) require_no_advection(data);
  Evaluation ev;
  ev.states.u_neumann = solve_neumann_state(mesh, alpha, data, cauchy.g);
  const Eigen::VectorXd res = ev.states.u_neumann - boundary_to_nodal(mesh, cauchy.f);
  const Eigen::VectorXd mres = assemble_boundary_mass(mesh) * res;
  ev.cost.misfit = 0.5 * res.dot(mres);
  if (with_gradient) {
    const RealMatrix a = assemble_real_operator(mesh, alpha, data);
    const Eigen::VectorXd p = solve_neumann_adjoint(mesh, a, data, mres);
    const Gradients gv = cell_gradients(mesh, ev.states.u_neumann);
    const Gradients gp = cell_gradients(mesh, p);
    ev.misfit_density.resize(static_cast<Eigen::Index>(mesh.num_triangles()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      ev.misfit_density[static_cast<Eigen::Index>(t)] = -dot(gv[t], gp[t]);
    }
  }
  finish(ev, mesh, alpha, w, with_gradient);
  return ev;
}

Evaluation evaluate_tn(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                       const CauchyData& cauchy, const Weights& w, bool with_gradient) {
  if (with_gradient) require_no_advection(data);
  Evaluation ev;
  ev.states.u_dirichlet = solve_dirichlet_state(mesh, alpha, data, cauchy.f);
  const Eigen::VectorXd flux = recover_boundary_flux(mesh, alpha, data, ev.states.u_dirichlet);
  const Eigen::VectorXd r = flux - cauchy.g;
  ev.cost.misfit = 0.5 * r.dot(boundary_block(mesh) * r);
  if (with_gradient) {
    const RealMatrix a = assemble_real_operator(mesh, alpha, data);
    const Eigen::VectorXd p =
        solve_dirichlet_adjoint(mesh, a, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_nodes())), r);
    const Gradients gu = cell_gradients(mesh, ev.states.u_dirichlet);
    const Gradients gp = cell_gradients(mesh, p);
    ev.misfit_density.resize(static_cast<Eigen::Index>(mesh.num_triangles()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      ev.misfit_density[static_cast<Eigen::Index>(t)] = dot(gu[t], gp[t]);
    }
  }
  finish(ev, mesh, alpha, w, with_gradient);
  return ev;
}

}  // namespace

Eigen::VectorXd recover_boundary_flux(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                                      const RealNodalField& u) {
  const Eigen::VectorXd residual = assemble_real_operator(mesh, alpha, data) * u - assemble_load(mesh, data.source);
  return SparseSolver<double>(boundary_block(mesh)).solve(boundary_restrict(mesh, residual));
}

Evaluation evaluate(Method method, const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                    const CauchyData& cauchy, const Weights& weights, bool with_gradient) {
  if (alpha.size() != mesh.num_triangles()) throw ArgumentError("coefficient size does not match triangle count");
  switch (method) {
    case Method::ccbm: return evaluate_ccbm(mesh, alpha, data, cauchy, weights, with_gradient);
    case Method::kv: return evaluate_kv(mesh, alpha, data, cauchy, weights, with_gradient);
    case Method::td: return evaluate_td(mesh, alpha, data, cauchy, weights, with_gradient);
    case Method::tn: return evaluate_tn(mesh, alpha, data, cauchy, weights, with_gradient);
  }
  throw ArgumentError("unknown method");
}

CostBreakdown cost(Method method, const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,
                   const CauchyData& cauchy, const Weights& weights) {
  return evaluate(method, mesh, alpha, data, cauchy, weights, false).cost;
}

GradientDensity gradient(Method method, const TriMesh& mesh, const CoefficientField& alpha,
                         const ScalarData& data, const CauchyData& cauchy, const Weights& weights) {
  return evaluate(method, mesh, alpha, data, cauchy, weights, true).density;
}

#define RECON_METHOD_WRAPPERS(name)                                                                          \
  CostBreakdown cost_##name(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,     \
                            const CauchyData& cauchy, const Weights& weights) {                             \
    return cost(Method::name, mesh, alpha, data, cauchy, weights);                                          \
  }                                                                                                          \
  GradientDensity grad_##name(const TriMesh& mesh, const CoefficientField& alpha, const ScalarData& data,   \
                              const CauchyData& cauchy, const Weights& weights) {                           \
    return gradient(Method::name, mesh, alpha, data, cauchy, weights);                                      \
  }

RECON_METHOD_WRAPPERS(ccbm)
RECON_METHOD_WRAPPERS(kv)
RECON_METHOD_WRAPPERS(td)
RECON_METHOD_WRAPPERS(tn)

#undef RECON_METHOD_WRAPPERS

ErrorMetrics region_errors(std::span<const double> values, std::span<const double> exact) {
  if (values.size() != exact.size() || values.empty()) {
    throw ArgumentError("region value and exact value lists must be non-empty and equally long");
  }
  ErrorMetrics m;
  m.region_values.assign(values.begin(), values.end());
  m.region_exact.assign(exact.begin(), exact.end());
  for (std::size_t r = 0; r < values.size(); ++r) {
    const double abs_err = std::abs(values[r] - exact[r]);
    m.abs_errors.push_back(abs_err);
    m.rel_errors.push_back(abs_err / std::abs(exact[r]));
    m.avg_abs_error += abs_err;
    m.avg_rel_error += m.rel_errors.back();
  }
  m.avg_abs_error /= static_cast<double>(values.size());
  m.avg_rel_error /= static_cast<double>(values.size());
  return m;
}

ErrorMetrics error_metrics(const CoefficientField& alpha, const CoefficientField& alpha_star, const TriMesh& mesh,
                           const PartitionSpec& partition) {
  if (partition.region_count() != mesh.region_count()) {
    throw ArgumentError("partition declares " + std::to_string(partition.region_count()) +
                        " regions but the mesh carries " + std::to_string(mesh.region_count()));
  }
  return error_metrics(alpha, alpha_star, mesh);
}

ErrorMetrics error_metrics(const CoefficientField& alpha, const CoefficientField& alpha_star, const TriMesh& mesh) {
  if (alpha.size() != mesh.num_triangles() || alpha_star.size() != mesh.num_triangles()) {
    throw ArgumentError("coefficient size does not match triangle count");
  }
  const int regions = mesh.region_count();
  std::vector<double> value(static_cast<std::size_t>(regions), 0.0);
  std::vector<double> exact(value.size(), 0.0);
  std::vector<double> area(value.size(), 0.0);
  double diff_sq = 0.0, exact_sq = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto r = static_cast<std::size_t>(mesh.regions()[t]);
    const double a = mesh.area(t);
    value[r] += alpha[t] * a;
    exact[r] += alpha_star[t] * a;
    area[r] += a;
    diff_sq += (alpha[t] - alpha_star[t]) * (alpha[t] - alpha_star[t]) * a;
    exact_sq += alpha_star[t] * alpha_star[t] * a;
  }
  for (std::size_t r = 0; r < value.size(); ++r) {
    if (area[r] <= 0.0) throw ArgumentError("region " + std::to_string(r) + " is empty");
    value[r] /= area[r];
    exact[r] /= area[r];
  }
  ErrorMetrics m = region_errors(value, exact);
  m.l2_error = std::sqrt(diff_sq);
  m.relative_l2 = exact_sq > 0.0 ? m.l2_error / std::sqrt(exact_sq) : 0.0;
  return m;
}

}  // namespace recon
