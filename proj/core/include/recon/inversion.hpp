#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recon/objectives.hpp"

namespace recon {

enum class UpdateRule {
  /// alpha - t * G(misfit density + rho alpha)
  smoothed_full,
  /// alpha - t * G(misfit density) -/+ t rho alpha
  smoothed_misfit_plus_raw_tikhonov,
  /// smoothed_misfit_plus_raw_tikhonov with mu forced to 0
  l2_conventional,
};

/// Sign of the raw Tikhonov term in the split update rules. `plus`
/// adds +t rho alpha, which ascends the regularization term.
enum class TikhonovSign { minus, plus };

enum class StepKind { fixed, armijo };
enum class RhoSchedule { constant, balancing };

std::string_view to_string(UpdateRule r);
UpdateRule parse_update_rule(std::string_view name);

struct ArmijoParams {
  double c1 = 1e-4;
  double shrink = 0.5;
  double t_init = 1.0;
  double t_min = 1e-10;
};

struct DescentConfig {
  Method method = Method::ccbm;
  UpdateRule update_rule = UpdateRule::smoothed_misfit_plus_raw_tikhonov;
  double mu = 1.0;
  StepKind step_kind = StepKind::fixed;
  double step = 1.0;  // fixed step t
  ArmijoParams armijo;
  /// Each Armijo search starts from min(t_init, grow * previous accepted t).
  double armijo_grow = 2.0;
  RhoSchedule rho_schedule = RhoSchedule::constant;
  double gamma = 2.0;
  Weights weights;
  int k_max = 100;
  std::optional<PartitionSpec> projection;
  TikhonovSign tikhonov_sign = TikhonovSign::minus;
  std::optional<std::pair<double, double>> bounds;
  /// Stop once the smoothed-gradient H1 norm falls below this; 0 disables.
  double grad_tolerance = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError for out-of-range parameters.
  void validate() const;
};

struct IterationRecord {
  int k = 0;
  /// Cost at the iterate alpha^[k] with the rho used in this iteration.
  CostBreakdown cost;
  /// H1 norm of the smoothed gradient field.
  double grad_norm = 0.0;
  double step = 0.0;
  double rho = 0.0;
  /// Region values of alpha^[k] (projected runs only).
  std::vector<double> region_values;
  std::optional<ErrorMetrics> errors;
  /// (gamma - 1) J - rho R after a balancing update; nullopt if it did not fire.
  std::optional<double> balancing_residual;
  bool stalled = false;
  std::string warning;
};

struct InversionResult {
  CoefficientField alpha;
  std::vector<IterationRecord> history;
  bool failed = false;
  bool stalled = false;
  std::string message;
};

/// P1 Riesz representative of a P0 density in the inner product
/// mu (grad u, grad v) + (u, v). The factorization is built once.
class SobolevSmoother {
 public:
  SobolevSmoother(const TriMesh& mesh, double mu);
  RealNodalField operator()(const GradientDensity& density) const;
  double mu() const noexcept { return mu_; }

 private:
  const TriMesh* mesh_;
  double mu_;
  SparseSolver<double> solver_;
};

RealNodalField sobolev_smooth(const TriMesh& mesh, const GradientDensity& density, double mu);

/// Triangle values of a P1 field: mean of its three nodal values.
Eigen::VectorXd restrict_to_cells(const TriMesh& mesh, const RealNodalField& field);

/// One update of the configured rule with step t. `smoothed` is G computed
/// from the rule's density; the optional clamp is applied last.
CoefficientField descent_step(const CoefficientField& alpha, const RealNodalField& smoothed, const TriMesh& mesh,
                              const DescentConfig& config, double rho, double t);

struct ArmijoResult {
  double t = 0.0;
  double cost = 0.0;
  Eigen::VectorXd trial;
  int evaluations = 0;
  /// t fell below t_min without sufficient decrease.
  bool stalled = false;
  /// The supplied direction was not a descent direction.
  bool degenerate = false;
};

/// Backtracking on t = t_init * shrink^n. The trial point is trial_at(t);
/// it is accepted when cost(trial) <= f0 - c1 |<grad, trial - x>| in the
/// inner product `inner`. A cost evaluation that throws recon::Error or
/// returns a non-finite value rejects that t.
ArmijoResult armijo_search(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& grad,
                           const std::function<Eigen::VectorXd(double)>& trial_at,
                           const std::function<double(const Eigen::VectorXd&)>& cost_fn,
                           const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& inner,
                           const ArmijoParams& params);

/// Straight-line variant x + t * direction with the Euclidean inner product.
/// A non-descent direction returns t_min with `degenerate` set.
ArmijoResult armijo_search(const Eigen::VectorXd& x, const Eigen::VectorXd& direction, double f0,
                           const Eigen::VectorXd& grad, const std::function<double(const Eigen::VectorXd&)>& cost_fn,
                           const ArmijoParams& params);

/// Pick-a-point restriction: every triangle of region r takes the value of
/// the triangle containing sample point r. Built once per (mesh, partition).
class PiecewiseProjector {
 public:
  /// Throws ConfigError if a sample point lies outside the mesh or the
  /// partition's region count differs from the mesh's.
  PiecewiseProjector(const TriMesh& mesh, const PartitionSpec& partition);
  CoefficientField operator()(const CoefficientField& alpha) const;
  /// Value per region of a field (the sampled triangle values).
  std::vector<double> region_values(const CoefficientField& alpha) const;

 private:
  const TriMesh* mesh_;
  std::vector<int> sample_triangles_;
};

CoefficientField project_piecewise_constant(const CoefficientField& alpha, const PartitionSpec& partition,
                                            const TriMesh& mesh);

struct BalancingUpdate {
  double rho = 0.0;
  /// (gamma - 1) J - rho R evaluated in floating point.
  double residual = 0.0;
  bool held = false;
  std::string warning;
};

/// rho = (gamma - 1) J / R, nudged by at most a few ulps so that the
/// floating-point residual is zero. R <= 0 keeps previous_rho.
BalancingUpdate update_rho_balancing(double misfit, double r_value, double gamma, double previous_rho);
double balancing_residual(double misfit, double r_value, double gamma, double rho);

/// Runs the descent loop for config.k_max iterations. When alpha_star is
/// given, each record carries error metrics (per region if the run is
/// projected). Solver failures end the run with failed = true and the
/// history so far.
InversionResult run_inversion(const TriMesh& mesh, const ScalarData& data, const CauchyData& cauchy,
                              const CoefficientField& alpha0, const DescentConfig& config,
                              const std::optional<CoefficientField>& alpha_star = std::nullopt);

/// "k,cost_total,cost_misfit,cost_reg,grad_norm,step,rho" plus region and
/// error columns when present.
void write_history_csv(const std::vector<IterationRecord>& history, std::ostream& out);
void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path);

}  // namespace recon
