#include "recon/scenario.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "recon/errors.hpp"

namespace recon {

namespace {

constexpr double kPi = std::numbers::pi;

double sin_sin(Point p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); }

struct FunctionEntry {
  const char* name;
  double (*fn)(Point);
};

const FunctionEntry kFunctions[] = {
    {"zero", [](Point) { return 0.0; }},
    {"one", [](Point) { return 1.0; }},
    {"pringle", [](Point p) { return 1.0 + 0.5 * p.x * p.y; }},
    {"sin-sin", sin_sin},
    {"exp-sin-sin", [](Point p) { return std::exp(sin_sin(p)); }},
    {"one-plus-half-sin-sin", [](Point p) { return 1.0 + 0.5 * sin_sin(p); }},
    {"two-plus-sin-sin", [](Point p) { return 2.0 + sin_sin(p); }},
    {"mild-oscillation", [](Point p) { return 1.0 + 0.25 * sin_sin(p); }},
    {"mild-oscillation-xy", [](Point p) { return 1.0 + 0.25 * p.x * p.y * sin_sin(p); }},
    {"slow-oscillation",
     [](Point p) { return 1.0 + std::sin(kPi * p.x / 8.0) * std::sin(kPi * p.y / 8.0); }},
    {"x-plus-y-plus-two", [](Point p) { return p.x + p.y + 2.0; }},
};

DomainSpec disk(double radius) {
  DomainSpec d;
  d.kind = DomainSpec::Kind::disk;
  d.radius = radius;
  return d;
}

DomainSpec unit_square() {
  DomainSpec d;
  d.kind = DomainSpec::Kind::square;
  return d;
}

ScenarioSpec smooth_base(std::string name, double radius, const char* alpha_star, const char* g) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.domain = disk(radius);
  s.alpha_star = named_function(alpha_star);
  s.g_input = named_function(g);
  s.source = named_function("one");
  s.reaction = 1.0;
  s.alpha0 = 1.0;
  s.resolution = 12;
  s.descent.method = Method::ccbm;
  s.descent.update_rule = UpdateRule::smoothed_misfit_plus_raw_tikhonov;
  s.descent.mu = 1.0;
  s.descent.step = 1.0;
  s.descent.k_max = 200;
  return s;
}

ScenarioSpec piecewise_base(std::string name, PartitionSpec partition, std::vector<double> values, const char* g) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.domain = unit_square();
  s.region_values = std::move(values);
  s.partition = std::move(partition);
  s.g_input = named_function(g);
  s.source = named_function("x-plus-y-plus-two");
  s.reaction = 1.0;
  s.alpha0 = 2.0;
  s.resolution = 16;
  s.descent.method = Method::ccbm;
  s.descent.update_rule = UpdateRule::smoothed_misfit_plus_raw_tikhonov;
  // Pick-a-point directions are not descent directions of the projected
  // problem, so a line search stalls early; fixed steps are used instead.
  s.descent.mu = 0.1;
  s.descent.weights.w1 = 0.1;
  s.descent.step = 0.5;
  s.descent.k_max = 2000;
  s.descent.bounds = std::pair{0.05, 20.0};
  s.descent.projection = s.partition;
  s.method_steps = {{Method::kv, 0.25}, {Method::td, 0.1}, {Method::tn, 0.05}};
  return s;
}

}  // namespace

NamedFunction named_function(std::string_view name) {
  for (const auto& e : kFunctions) {
    if (name == e.name) return {std::string(name), e.fn};
  }
  double value = 0.0;
  const char* first = name.data();
  const char* last = name.data() + name.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc() && ptr == last && !name.empty() && std::isfinite(value)) {
    return {std::string(name), [value](Point) { return value; }};
  }
  throw ConfigError("unknown function '" + std::string(name) + "'");
}

std::vector<std::string> named_function_names() {
  std::vector<std::string> out;
  for (const auto& e : kFunctions) out.emplace_back(e.name);
  return out;
}

TriMesh build_domain_mesh(const DomainSpec& domain, int resolution) {
  switch (domain.kind) {
    case DomainSpec::Kind::disk: return build_disk_mesh(domain.center, domain.radius, resolution);
    case DomainSpec::Kind::square:
      return build_square_mesh(domain.xmin, domain.xmax, domain.ymin, domain.ymax, resolution);
  }
  throw ConfigError("unknown domain kind");
}

DescentConfig ScenarioSpec::descent_for(Method method) const {
  DescentConfig d = descent;
  d.method = method;
  if (auto it = method_steps.find(method); it != method_steps.end()) {
    d.step = it->second;
    d.armijo.t_init = it->second;
  }
  return d;
}

void ScenarioSpec::validate() const {
  if (resolution < 1) throw ConfigError("resolution must be at least 1");
  if (data_refinements < 0) throw ConfigError("data_refinements must be non-negative");
  if (!g_input.fn) throw ConfigError("scenario '" + name + "' has no g_input");
  if (!source.fn) throw ConfigError("scenario '" + name + "' has no source");
  if (region_values.empty() && !alpha_star.fn) throw ConfigError("scenario '" + name + "' has no alpha_star");
  if (!region_values.empty()) {
    if (!partition) throw ConfigError("region_values require a partition");
    if (static_cast<int>(region_values.size()) != partition->region_count()) {
      throw ConfigError("region_values has " + std::to_string(region_values.size()) + " entries but the partition has " +
                        std::to_string(partition->region_count()) + " regions");
    }
  }
  if (partition) partition->validate();
  for (const auto& [m, t] : method_steps) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("step for " + std::string(to_string(m)) + " must be positive");
  }
  descent.validate();
}

ScenarioSpec preset(std::string_view name, const PresetOptions& options) {
  if (name == "disk-smooth") return smooth_base("disk-smooth", 1.0, "pringle", "one");
  if (name == "disk-smooth-sin-input") return smooth_base("disk-smooth-sin-input", 1.0, "pringle", "sin-sin");
  if (name == "mild-oscillation" || name == "mild-oscillation-xy") {
    ScenarioSpec s = smooth_base(std::string(name), 2.0, name == "mild-oscillation" ? "mild-oscillation"
                                                                                     : "mild-oscillation-xy",
                                 "sin-sin");
    s.resolution = 16;
    s.descent.mu = 1.0;
    return s;
  }
  if (name == "h1-weight-pringle" || name == "h1-weight-oscillating") {
    ScenarioSpec s = smooth_base(std::string(name), 2.0,
                                 name == "h1-weight-pringle" ? "pringle" : "slow-oscillation", "one");
    s.resolution = 16;
    s.descent.mu = 0.1;
    s.descent.weights.rho = 0.001;
    return s;
  }
  if (name == "two-subregions") {
    return piecewise_base("two-subregions", PartitionSpec::half_plane(0, 0.0, {-0.95, 0.0}, {0.95, 0.0}),
                          {0.75, 0.50}, "one-plus-half-sin-sin");
  }
  if (name == "three-subregions") {
    return piecewise_base("three-subregions",
                          PartitionSpec::disk_plus_halves({0.0, 0.0}, options.radius, {0.0, 0.0}, {-0.95, 0.0},
                                                          {0.95, 0.0}),
                          {1.5, 0.75, 0.50}, "exp-sin-sin");
  }
  if (name == "four-quadrants") {
    return piecewise_base("four-quadrants", PartitionSpec::quadrants({0.0, 0.0}, options.xi),
                          {0.25, 0.50, 0.75, 1.00}, "exp-sin-sin");
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"disk-smooth",        "disk-smooth-sin-input", "mild-oscillation", "mild-oscillation-xy",
          "h1-weight-pringle",  "h1-weight-oscillating", "two-subregions",   "three-subregions",
          "four-quadrants"};
}

Scenario build_scenario(const ScenarioSpec& spec, SynthesisOptions options) {
  spec.validate();
  TriMesh mesh = build_domain_mesh(spec.domain, spec.resolution);
  TriMesh fine = refine_uniform(mesh, spec.data_refinements);
  if (spec.partition) {
    mesh = assign_regions(mesh, *spec.partition);
    fine = assign_regions(fine, *spec.partition);
  }

  auto make_data = [&](const TriMesh& m) { return ScalarData::make(m, spec.advection, spec.reaction, spec.source.fn); };
  auto make_alpha = [&](const TriMesh& m) {
    return spec.region_values.empty() ? CoefficientField::from_function(m, spec.alpha_star.fn)
                                      : CoefficientField::from_regions(m, spec.region_values);
  };

  ScalarData data = make_data(mesh);
  CoefficientField alpha_star = make_alpha(mesh);
  SynthesisResult synthesis =
      synthesize_cauchy_data(make_alpha(fine), make_data(fine), spec.g_input.fn, fine, mesh, options);
  CoefficientField alpha0 = CoefficientField::constant(mesh, spec.alpha0);
  return Scenario{spec, std::move(mesh), std::move(fine), std::move(data), std::move(alpha_star), std::move(alpha0),
                  std::move(synthesis)};
}

}  // namespace recon
