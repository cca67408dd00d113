#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recon/forward.hpp"
#include "recon/inversion.hpp"

namespace recon {

/// A scalar function of position together with the name it was built from.
struct NamedFunction {
  std::string label;
  ScalarFunction fn;
};

/// Looks up a built-in function by name ("pringle", "sin-sin",
/// "exp-sin-sin", ...) or parses a decimal constant. Throws ConfigError for
/// unknown names.
NamedFunction named_function(std::string_view name);
std::vector<std::string> named_function_names();

struct DomainSpec {
  enum class Kind { disk, square };
  Kind kind = Kind::disk;
  Point center;
  double radius = 1.0;
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
};

/// Builds the inversion mesh: `resolution` rings for disks, cells per side for squares.
TriMesh build_domain_mesh(const DomainSpec& domain, int resolution);

struct ScenarioSpec {
  std::string name;
  DomainSpec domain;
  /// Smooth exact coefficient; ignored when region_values is non-empty.
  NamedFunction alpha_star;
  /// Piecewise-constant exact coefficient, one value per partition region.
  std::vector<double> region_values;
  NamedFunction g_input;
  NamedFunction source;
  double reaction = 1.0;
  Eigen::Vector2d advection = Eigen::Vector2d::Zero();
  double alpha0 = 1.0;
  std::optional<PartitionSpec> partition;
  int resolution = 12;
  /// Uniform refinements between the inversion mesh and the data mesh.
  int data_refinements = 2;
  /// Descent settings the preset is tuned for.
  DescentConfig descent;
  /// Per-method step overrides (fixed step and Armijo t_init).
  std::map<Method, double> method_steps;

  /// `descent` with the method and its step override applied.
  DescentConfig descent_for(Method method) const;
  /// Throws ConfigError on inconsistent fields.
  void validate() const;
};

struct PresetOptions {
  /// Central disk radius of "three-subregions".
  double radius = 0.5;
  /// Pick-point offset of "four-quadrants".
  double xi = 0.9;
};

/// Throws ConfigError for unknown names.
ScenarioSpec preset(std::string_view name, const PresetOptions& options = {});
std::vector<std::string> preset_names();

/// Meshes, data and clean synthetic measurements of one scenario.
struct Scenario {
  ScenarioSpec spec;
  TriMesh mesh;
  TriMesh fine_mesh;
  ScalarData data;
  CoefficientField alpha_star;
  CoefficientField alpha0;
  SynthesisResult synthesis;
};

/// Builds the inversion and data meshes, assigns regions and synthesizes
/// clean Cauchy data on the data mesh.
Scenario build_scenario(const ScenarioSpec& spec, SynthesisOptions options = {});

}  // namespace recon
