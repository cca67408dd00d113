#include "recon/inversion.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "recon/errors.hpp"

namespace recon {

std::string_view to_string(UpdateRule r) {
  switch (r) {
    case UpdateRule::smoothed_full: return "smoothed-full";
    case UpdateRule::smoothed_misfit_plus_raw_tikhonov: return "smoothed-misfit-plus-raw-tikhonov";
    case UpdateRule::l2_conventional: return "l2-conventional";
  }
  return "?";
}

UpdateRule parse_update_rule(std::string_view name) {
  for (auto r : {UpdateRule::smoothed_full, UpdateRule::smoothed_misfit_plus_raw_tikhonov,
                 UpdateRule::l2_conventional}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown update rule '" + std::string(name) + "'");
}

void DescentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (k_max < 0) fail("k_max must be non-negative");
  if (!(mu >= 0.0)) fail("mu must be non-negative");
  if (step_kind == StepKind::fixed && !(step > 0.0)) fail("fixed step must be positive");
  if (step_kind == StepKind::armijo) {
    if (!(armijo.c1 >= 0.0 && armijo.c1 < 1.0)) fail("armijo c1 must lie in [0, 1)");
    if (!(armijo.shrink > 0.0 && armijo.shrink < 1.0)) fail("armijo shrink must lie in (0, 1)");
    if (!(armijo.t_init > 0.0)) fail("armijo t_init must be positive");
    if (!(armijo.t_min > 0.0 && armijo.t_min <= armijo.t_init)) fail("armijo t_min must lie in (0, t_init]");
    if (!(armijo_grow >= 1.0)) fail("armijo grow factor must be at least 1");
  }
  if (!(weights.rho >= 0.0)) fail("rho must be non-negative");
  if (!(weights.w0 >= 0.0 && weights.w1 >= 0.0)) fail("misfit weights must be non-negative");
  if (method == Method::ccbm && !(weights.w0 + weights.w1 > 0.0)) fail("w0 + w1 must be positive for ccbm");
  if (rho_schedule == RhoSchedule::balancing && !(gamma > 1.0)) fail("balancing gamma must exceed 1");
  if (bounds && !(bounds->first < bounds->second)) fail("bounds must satisfy lower < upper");
  if (!(grad_tolerance >= 0.0)) fail("grad_tolerance must be non-negative");
  if (projection) projection->validate();
}

// -- smoothing --------------------------------------------------------------

SobolevSmoother::SobolevSmoother(const TriMesh& mesh, double mu) : mesh_(&mesh), mu_(mu) {
  if (!(mu >= 0.0)) throw ArgumentError("smoothing weight mu must be non-negative");
  RealMatrix a = assemble_mass(mesh);
  if (mu > 0.0) a += mu * assemble_stiffness(mesh);
  solver_.factor(a);
}

RealNodalField SobolevSmoother::operator()(const GradientDensity& density) const {
  return solver_.solve(assemble_cell_load(*mesh_, density));
}

RealNodalField sobolev_smooth(const TriMesh& mesh, const GradientDensity& density, double mu) {
  return SobolevSmoother(mesh, mu)(density);
}

Eigen::VectorXd restrict_to_cells(const TriMesh& mesh, const RealNodalField& field) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    out[static_cast<Eigen::Index>(t)] = (field[tri[0]] + field[tri[1]] + field[tri[2]]) / 3.0;
  }
  return out;
}

CoefficientField descent_step(const CoefficientField& alpha, const RealNodalField& smoothed, const TriMesh& mesh,
                              const DescentConfig& config, double rho, double t) {
  Eigen::VectorXd next = alpha.values - t * restrict_to_cells(mesh, smoothed);
  if (config.update_rule != UpdateRule::smoothed_full) {
    const double sign = config.tikhonov_sign == TikhonovSign::minus ? -1.0 : 1.0;
    next += sign * t * rho * alpha.values;
  }
  if (config.bounds) next = next.cwiseMax(config.bounds->first).cwiseMin(config.bounds->second);
  return CoefficientField(std::move(next));
}

// -- line search ------------------------------------------------------------

ArmijoResult armijo_search(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& grad,
                           const std::function<Eigen::VectorXd(double)>& trial_at,
                           const std::function<double(const Eigen::VectorXd&)>& cost_fn,
                           const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& inner,
                           const ArmijoParams& params) {
  ArmijoResult out;
  for (double t = params.t_init; t >= params.t_min; t *= params.shrink) {
    Eigen::VectorXd trial = trial_at(t);
    double f = std::numeric_limits<double>::infinity();
    ++out.evaluations;
    try {
      f = cost_fn(trial);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(f)) continue;
    const double decrease = params.c1 * std::abs(inner(grad, trial - x));
    if (f <= f0 - decrease) {
      out.t = t;
      out.cost = f;
      out.trial = std::move(trial);
      return out;
    }
  }
  out.stalled = true;
  out.t = 0.0;
  out.cost = f0;
  out.trial = x;
  return out;
}

ArmijoResult armijo_search(const Eigen::VectorXd& x, const Eigen::VectorXd& direction, double f0,
                           const Eigen::VectorXd& grad, const std::function<double(const Eigen::VectorXd&)>& cost_fn,
                           const ArmijoParams& params) {
  if (!(grad.dot(direction) < 0.0)) {
    ArmijoResult out;
    out.degenerate = true;
    out.t = params.t_min;
    out.trial = x + params.t_min * direction;
    out.cost = cost_fn(out.trial);
    out.evaluations = 1;
    return out;
  }
  return armijo_search(
      x, f0, grad, [&](double t) -> Eigen::VectorXd { return x + t * direction; }, cost_fn,
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }, params);
}

// -- projection -------------------------------------------------------------

PiecewiseProjector::PiecewiseProjector(const TriMesh& mesh, const PartitionSpec& partition) : mesh_(&mesh) {
  partition.validate();
  if (partition.region_count() != mesh.region_count()) {
    throw ConfigError("partition declares " + std::to_string(partition.region_count()) +
                      " regions but the mesh carries " + std::to_string(mesh.region_count()));
  }
  for (int r = 0; r < partition.region_count(); ++r) {
    const Point p = partition.sample_points[static_cast<std::size_t>(r)];
    const int t = mesh.locate(p);
    if (t < 0) {
      std::ostringstream msg;
      msg << "sample point (" << p.x << ", " << p.y << ") of " << partition.region_name(r) << " lies outside the mesh";
      throw ConfigError(msg.str());
    }
    sample_triangles_.push_back(t);
  }
}

std::vector<double> PiecewiseProjector::region_values(const CoefficientField& alpha) const {
  std::vector<double> out;
  out.reserve(sample_triangles_.size());
  for (int t : sample_triangles_) out.push_back(alpha[static_cast<std::size_t>(t)]);
  return out;
}

CoefficientField PiecewiseProjector::operator()(const CoefficientField& alpha) const {
  if (alpha.size() != mesh_->num_triangles()) throw ArgumentError("coefficient size does not match triangle count");
  const std::vector<double> values = region_values(alpha);
  CoefficientField out = alpha;
  for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
    out[t] = values[static_cast<std::size_t>(mesh_->regions()[t])];
  }
  return out;
}

CoefficientField project_piecewise_constant(const CoefficientField& alpha, const PartitionSpec& partition,
                                            const TriMesh& mesh) {
  return PiecewiseProjector(mesh, partition)(alpha);
}

// -- balancing principle ----------------------------------------------------

double balancing_residual(double misfit, double r_value, double gamma, double rho) {
  const double lhs = (gamma - 1.0) * misfit;
  const double rhs = rho * r_value;
  return lhs - rhs;
}

BalancingUpdate update_rho_balancing(double misfit, double r_value, double gamma, double previous_rho) {
  if (!(gamma > 1.0)) throw ArgumentError("balancing requires gamma > 1");
  BalancingUpdate out;
  if (!(r_value > 0.0)) {
    out.rho = previous_rho;
    out.held = true;
    out.residual = balancing_residual(misfit, r_value, gamma, previous_rho);
    out.warning = "regularization value is not positive; rho held";
    return out;
  }
  const double target = (gamma - 1.0) * misfit / r_value;
  // The quotient is within an ulp or two of a value whose product with R
  // rounds back to (gamma - 1) J; search that neighbourhood.
  double best = target;
  double best_res = std::abs(balancing_residual(misfit, r_value, gamma, target));
  double up = target, down = target;
  for (int i = 0; i < 16 && best_res != 0.0; ++i) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    for (double cand : {up, down}) {
      const double res = std::abs(balancing_residual(misfit, r_value, gamma, cand));
      if (res < best_res) {
        best = cand;
        best_res = res;
      }
    }
  }
  out.rho = best;
  out.residual = balancing_residual(misfit, r_value, gamma, best);
  if (out.residual != 0.0) out.warning = "no representable rho zeroes the balancing residual";
  return out;
}

// -- driver -----------------------------------------------------------------

InversionResult run_inversion(const TriMesh& mesh, const ScalarData& data, const CauchyData& cauchy,
                              const CoefficientField& alpha0, const DescentConfig& config,
                              const std::optional<CoefficientField>& alpha_star) {
  config.validate();
  if (alpha0.size() != mesh.num_triangles()) throw ArgumentError("initial coefficient size does not match mesh");

  InversionResult result;
  result.alpha = alpha0;
  if (config.k_max == 0) return result;

  std::optional<PiecewiseProjector> projector;
  if (config.projection) projector.emplace(mesh, *config.projection);
  const double mu = config.update_rule == UpdateRule::l2_conventional ? 0.0 : config.mu;
  const SobolevSmoother smooth(mesh, mu);

  Weights weights = config.weights;
  double last_t = config.armijo.t_init;
  CoefficientField& alpha = result.alpha;

  for (int k = 0; k < config.k_max; ++k) {
    IterationRecord rec;
    rec.k = k;
    Evaluation ev;
    try {
      ev = evaluate(config.method, mesh, alpha, data, cauchy, weights, true);
    } catch (const Error& e) {
      result.failed = true;
      result.message = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }

    if (config.rho_schedule == RhoSchedule::balancing) {
      const BalancingUpdate upd =
          update_rho_balancing(ev.cost.misfit, coefficient_l2_squared(mesh, alpha), config.gamma, weights.rho);
      weights.rho = upd.rho;
      if (!upd.held) rec.balancing_residual = upd.residual;
      rec.warning = upd.warning;
      ev.cost.regularization = tikhonov(mesh, alpha, weights.rho);
      ev.cost.total = ev.cost.misfit + ev.cost.regularization;
      ev.density = ev.misfit_density + weights.rho * alpha.values;
    }

    const GradientDensity& rule_density =
        config.update_rule == UpdateRule::smoothed_full ? ev.density : ev.misfit_density;
    const RealNodalField g = smooth(rule_density);
    rec.cost = ev.cost;
    rec.rho = weights.rho;
    rec.grad_norm = norms(g, mesh).h1;
    if (projector) rec.region_values = projector->region_values(alpha);
    if (alpha_star) {
      rec.errors = error_metrics(alpha, *alpha_star, mesh);
    }

    if (config.grad_tolerance > 0.0 && rec.grad_norm < config.grad_tolerance) {
      result.history.push_back(std::move(rec));
      result.message = "gradient norm below tolerance";
      break;
    }

    auto trial_at = [&](double t) {
      CoefficientField next = descent_step(alpha, g, mesh, config, weights.rho, t);
      return projector ? (*projector)(next) : next;
    };

    if (config.step_kind == StepKind::fixed) {
      rec.step = config.step;
      alpha = trial_at(config.step);
    } else {
      ArmijoParams params = config.armijo;
      params.t_init = std::max(std::min(config.armijo.t_init, config.armijo_grow * last_t), config.armijo.t_min);
      const ArmijoResult ar = armijo_search(
          alpha.values, ev.cost.total, ev.density,
          [&](double t) -> Eigen::VectorXd { return trial_at(t).values; },
          [&](const Eigen::VectorXd& a) {
            return evaluate(config.method, mesh, CoefficientField(a), data, cauchy, weights, false).cost.total;
          },
          [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return l2_inner(mesh, a, b); }, params);
      if (ar.stalled) {
        rec.stalled = true;
        rec.step = 0.0;
        result.history.push_back(std::move(rec));
        result.stalled = true;
        result.message = "line search stalled at iteration " + std::to_string(k);
        break;
      }
      rec.step = ar.t;
      last_t = ar.t;
      alpha = CoefficientField(ar.trial);
    }
    result.history.push_back(std::move(rec));
  }
  return result;
}

// -- history output ---------------------------------------------------------

void write_history_csv(const std::vector<IterationRecord>& history, std::ostream& out) {
  const std::size_t n_regions = history.empty() ? 0 : history.front().region_values.size();
  const bool has_errors = !history.empty() && history.front().errors.has_value();
  const std::size_t n_err = has_errors ? history.front().errors->abs_errors.size() : 0;
  out << "k,cost_total,cost_misfit,cost_reg,grad_norm,step,rho";
  for (std::size_t r = 0; r < n_regions; ++r) out << ",alpha_region_" << r;
  if (has_errors) {
    for (std::size_t r = 0; r < n_err; ++r) out << ",err_region_" << r;
    out << ",avg_err";
  }
  out << '\n' << std::setprecision(17);
  for (const auto& rec : history) {
    out << rec.k << ',' << rec.cost.total << ',' << rec.cost.misfit << ',' << rec.cost.regularization << ','
        << rec.grad_norm << ',' << rec.step << ',' << rec.rho;
    for (double v : rec.region_values) out << ',' << v;
    if (rec.errors) {
      for (double v : rec.errors->abs_errors) out << ',' << v;
      out << ',' << rec.errors->avg_abs_error;
    }
    out << '\n';
  }
}

void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_history_csv(history, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace recon
