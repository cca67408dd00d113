#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recon/report.hpp"
#include "recon/scenario.hpp"

namespace recon {

/// A sweep over methods x noise levels x seeds on one scenario.
///
/// JSON schema (all keys optional unless noted):
///
///   preset           string, one of preset_names(); required unless
///                    scenario.domain is given
///   preset_options   {radius, xi}
///   scenario         {name, domain, alpha_star, region_values, partition,
///                    g, source, reaction, advection, alpha0, resolution,
///                    data_refinements}
///   methods          non-empty array of "ccbm" | "kv" | "td" | "tn" (required)
///   noise_levels     non-empty array of delta >= 0 (default [0])
///   seeds            non-empty array of unsigned integers (default [1])
///   descent          descent overrides for every method
///   method_descent   {"<method>": descent overrides}
///   output_dir       string (default "out"); "" disables file output
///   jobs             concurrent runs (default 1)
///   vtk              write VTK dumps of final coefficients (default true)
///
/// Descent overrides: update_rule, mu, step_kind ("fixed" | "armijo"), step,
/// armijo {c1, shrink, t_init, t_min, grow}, rho_schedule ("constant" |
/// "balancing"), gamma, rho, w0, w1, k_max, tikhonov_sign ("minus" |
/// "plus"), bounds ([lo, hi] or null), grad_tolerance, projection (bool).
///
/// domain: {kind: "disk", center, radius} or {kind: "square", xmin, xmax,
/// ymin, ymax}. partition: {kind: "whole-domain" | "half-plane" |
/// "quadrants" | "disk-plus-halves", axis, threshold, center, radius, xi,
/// samples: [[x, y], ...]}.
struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<Method> methods;
  std::vector<double> noise_levels{0.0};
  std::vector<std::uint64_t> seeds{1};
  /// Resolved descent settings, one per entry of `methods`.
  std::map<Method, DescentConfig> descent;
  std::string output_dir = "out";
  int jobs = 1;
  bool write_vtk = true;
  SynthesisOptions synthesis;
};

/// Throws ConfigError naming every offending key, or ParseError for malformed JSON.
ExperimentConfig parse_experiment_config(const std::string& json_text);
/// Throws IoError if the file cannot be read.
ExperimentConfig load_experiment_config(const std::string& path);

struct RunRecord {
  Method method = Method::ccbm;
  double noise = 0.0;
  std::uint64_t seed = 0;
  /// File stem of this run's outputs.
  std::string stem;
  bool failed = false;
  bool stalled = false;
  std::string message;
  int iterations = 0;
  /// Final region values and errors; empty if the run never started.
  std::optional<ErrorMetrics> errors;
};

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  ComparisonTable table;
  bool any_failed() const;
};

/// "<method>_noise<delta>_seed<seed>".
std::string run_stem(Method method, double noise, std::uint64_t seed);

/// Executes every (method, noise, seed) run, up to `jobs` at a time. A run
/// that fails is recorded and does not affect the others. Unless
/// output_dir is empty, writes per run <stem>_history.csv, <stem>_alpha.csv,
/// <stem>_measurement.csv and optionally <stem>_alpha.vtk, plus runs.csv and
/// <scenario>_table.csv.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct GradientCheck {
  Method method = Method::ccbm;
  int directions = 0;
  double max_rel_error = 0.0;
  bool passed = false;
  /// Set when an evaluation threw.
  std::string message;
};

/// Compares adjoint directional derivatives with central differences at a
/// perturbed initial guess in `directions` pseudo-random directions.
std::vector<GradientCheck> gradient_check(const ExperimentConfig& config, int directions = 5,
                                          double tolerance = 1e-3, std::uint64_t seed = 7);

}  // namespace recon
