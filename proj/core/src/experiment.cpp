#include "recon/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "recon/errors.hpp"
#include "recon/rng.hpp"

namespace recon {

namespace {

using json = nlohmann::json;

std::string join_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

/// Walks a JSON document and collects every schema problem instead of
/// stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  bool expect_object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        errors.push_back(join_path(path, key) + ": unknown key");
      }
    }
  }

  bool number(const json& obj, std::string_view key, const std::string& path, double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number()) {
      fail(join_path(path, key), "expected a number");
      return false;
    }
    out = it->get<double>();
    return true;
  }

  bool integer(const json& obj, std::string_view key, const std::string& path, int& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number_integer()) {
      fail(join_path(path, key), "expected an integer");
      return false;
    }
    out = it->get<int>();
    return true;
  }

  bool boolean(const json& obj, std::string_view key, const std::string& path, bool& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_boolean()) {
      fail(join_path(path, key), "expected true or false");
      return false;
    }
    out = it->get<bool>();
    return true;
  }

  bool string(const json& obj, std::string_view key, const std::string& path, std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_string()) {
      fail(join_path(path, key), "expected a string");
      return false;
    }
    out = it->get<std::string>();
    return true;
  }

  bool point(const json& j, const std::string& path, Point& out) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      fail(path, "expected [x, y]");
      return false;
    }
    out = {j[0].get<double>(), j[1].get<double>()};
    return true;
  }

  /// Runs `f`, turning a ConfigError into an entry for `path`.
  template <class F>
  void guarded(const std::string& path, F&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }
};

void read_domain(Reader& r, const json& j, const std::string& path, DomainSpec& d) {
  if (!r.expect_object(j, path)) return;
  r.check_keys(j, path, {"kind", "center", "radius", "xmin", "xmax", "ymin", "ymax"});
  std::string kind;
  if (!r.string(j, "kind", path, kind)) {
    r.fail(join_path(path, "kind"), "required");
    return;
  }
  if (kind == "disk") {
    d.kind = DomainSpec::Kind::disk;
  } else if (kind == "square") {
    d.kind = DomainSpec::Kind::square;
  } else {
    r.fail(join_path(path, "kind"), "expected \"disk\" or \"square\"");
  }
  if (auto it = j.find("center"); it != j.end()) r.point(*it, join_path(path, "center"), d.center);
  r.number(j, "radius", path, d.radius);
  r.number(j, "xmin", path, d.xmin);
  r.number(j, "xmax", path, d.xmax);
  r.number(j, "ymin", path, d.ymin);
  r.number(j, "ymax", path, d.ymax);
}

void read_partition(Reader& r, const json& j, const std::string& path, std::optional<PartitionSpec>& out) {
  if (!r.expect_object(j, path)) return;
  r.check_keys(j, path, {"kind", "axis", "threshold", "center", "radius", "xi", "samples"});
  std::string kind;
  if (!r.string(j, "kind", path, kind)) {
    r.fail(join_path(path, "kind"), "required");
    return;
  }
  std::vector<Point> samples;
  if (auto it = j.find("samples"); it != j.end()) {
    if (!it->is_array()) {
      r.fail(join_path(path, "samples"), "expected an array of [x, y]");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        Point p;
        if (r.point((*it)[i], join_path(path, "samples") + "[" + std::to_string(i) + "]", p)) samples.push_back(p);
      }
    }
  }
  Point center;
  if (auto it = j.find("center"); it != j.end()) r.point(*it, join_path(path, "center"), center);
  auto need_samples = [&](std::size_t n) {
    if (samples.size() == n) return true;
    r.fail(join_path(path, "samples"), "expected " + std::to_string(n) + " points");
    return false;
  };
  if (kind == "whole-domain") {
    if (need_samples(1)) out = PartitionSpec::whole_domain(samples[0]);
  } else if (kind == "half-plane") {
    int axis = 0;
    double threshold = 0.0;
    r.integer(j, "axis", path, axis);
    r.number(j, "threshold", path, threshold);
    if (axis != 0 && axis != 1) r.fail(join_path(path, "axis"), "expected 0 or 1");
    if (need_samples(2)) out = PartitionSpec::half_plane(axis, threshold, samples[0], samples[1]);
  } else if (kind == "quadrants") {
    double xi = 0.9;
    r.number(j, "xi", path, xi);
    out = PartitionSpec::quadrants(center, xi);
  } else if (kind == "disk-plus-halves") {
    double radius = 0.5;
    r.number(j, "radius", path, radius);
    if (need_samples(3)) out = PartitionSpec::disk_plus_halves(center, radius, samples[0], samples[1], samples[2]);
  } else {
    r.fail(join_path(path, "kind"), "unknown partition kind '" + kind + "'");
  }
}

void read_function(Reader& r, const json& j, std::string_view key, const std::string& path, NamedFunction& out) {
  std::string name;
  if (r.string(j, key, path, name)) r.guarded(join_path(path, key), [&] { out = named_function(name); });
}

void read_scenario(Reader& r, const json& j, const std::string& path, ScenarioSpec& s) {
  if (!r.expect_object(j, path)) return;
  r.check_keys(j, path,
               {"name", "domain", "alpha_star", "region_values", "partition", "g", "source", "reaction", "advection",
                "alpha0", "resolution", "data_refinements"});
  r.string(j, "name", path, s.name);
  if (auto it = j.find("domain"); it != j.end()) read_domain(r, *it, join_path(path, "domain"), s.domain);
  read_function(r, j, "alpha_star", path, s.alpha_star);
  if (j.contains("alpha_star") && !j.contains("region_values")) s.region_values.clear();
  if (auto it = j.find("region_values"); it != j.end()) {
    if (!it->is_array() || it->empty() ||
        !std::all_of(it->begin(), it->end(), [](const json& v) { return v.is_number(); })) {
      r.fail(join_path(path, "region_values"), "expected a non-empty array of numbers");
    } else {
      s.region_values = it->get<std::vector<double>>();
    }
  }
  if (auto it = j.find("partition"); it != j.end()) read_partition(r, *it, join_path(path, "partition"), s.partition);
  read_function(r, j, "g", path, s.g_input);
  read_function(r, j, "source", path, s.source);
  r.number(j, "reaction", path, s.reaction);
  if (auto it = j.find("advection"); it != j.end()) {
    Point b;
    if (r.point(*it, join_path(path, "advection"), b)) s.advection = {b.x, b.y};
  }
  r.number(j, "alpha0", path, s.alpha0);
  r.integer(j, "resolution", path, s.resolution);
  r.integer(j, "data_refinements", path, s.data_refinements);
}

/// Descent overrides; `projection` is left untouched unless the key is present.
void read_descent(Reader& r, const json& j, const std::string& path, DescentConfig& d,
                  std::optional<bool>& projection) {
  if (!r.expect_object(j, path)) return;
  r.check_keys(j, path,
               {"update_rule", "mu", "step_kind", "step", "armijo", "rho_schedule", "gamma", "rho", "w0", "w1",
                "k_max", "tikhonov_sign", "bounds", "grad_tolerance", "projection"});
  std::string text;
  if (r.string(j, "update_rule", path, text)) {
    r.guarded(join_path(path, "update_rule"), [&] { d.update_rule = parse_update_rule(text); });
  }
  r.number(j, "mu", path, d.mu);
  if (r.string(j, "step_kind", path, text)) {
    if (text == "fixed") {
      d.step_kind = StepKind::fixed;
    } else if (text == "armijo") {
      d.step_kind = StepKind::armijo;
    } else {
      r.fail(join_path(path, "step_kind"), "expected \"fixed\" or \"armijo\"");
    }
  }
  r.number(j, "step", path, d.step);
  if (auto it = j.find("armijo"); it != j.end()) {
    const std::string ap = join_path(path, "armijo");
    if (r.expect_object(*it, ap)) {
      r.check_keys(*it, ap, {"c1", "shrink", "t_init", "t_min", "grow"});
      r.number(*it, "c1", ap, d.armijo.c1);
      r.number(*it, "shrink", ap, d.armijo.shrink);
      r.number(*it, "t_init", ap, d.armijo.t_init);
      r.number(*it, "t_min", ap, d.armijo.t_min);
      r.number(*it, "grow", ap, d.armijo_grow);
    }
  }
  if (r.string(j, "rho_schedule", path, text)) {
    if (text == "constant") {
      d.rho_schedule = RhoSchedule::constant;
    } else if (text == "balancing") {
      d.rho_schedule = RhoSchedule::balancing;
    } else {
      r.fail(join_path(path, "rho_schedule"), "expected \"constant\" or \"balancing\"");
    }
  }
  r.number(j, "gamma", path, d.gamma);
  r.number(j, "rho", path, d.weights.rho);
  r.number(j, "w0", path, d.weights.w0);
  r.number(j, "w1", path, d.weights.w1);
  r.integer(j, "k_max", path, d.k_max);
  if (r.string(j, "tikhonov_sign", path, text)) {
    if (text == "minus") {
      d.tikhonov_sign = TikhonovSign::minus;
    } else if (text == "plus") {
      d.tikhonov_sign = TikhonovSign::plus;
    } else {
      r.fail(join_path(path, "tikhonov_sign"), "expected \"minus\" or \"plus\"");
    }
  }
  if (auto it = j.find("bounds"); it != j.end()) {
    if (it->is_null()) {
      d.bounds.reset();
    } else if (it->is_array() && it->size() == 2 && (*it)[0].is_number() && (*it)[1].is_number()) {
      d.bounds = std::pair{(*it)[0].get<double>(), (*it)[1].get<double>()};
    } else {
      r.fail(join_path(path, "bounds"), "expected [lower, upper] or null");
    }
  }
  r.number(j, "grad_tolerance", path, d.grad_tolerance);
  bool flag = false;
  if (r.boolean(j, "projection", path, flag)) projection = flag;
}

std::string sanitize_field(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return s;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; convert it to a line number.
    const auto offset = std::min<std::size_t>(e.byte, json_text.size());
    const int line = 1 + static_cast<int>(std::count(json_text.begin(), json_text.begin() + offset, '\n'));
    throw ParseError(e.what(), line);
  }

  Reader r;
  ExperimentConfig cfg;
  if (!r.expect_object(root, "config")) throw ConfigError("invalid config: " + r.errors.front());
  r.check_keys(root, "", {"preset", "preset_options", "scenario", "methods", "noise_levels", "seeds", "descent",
                          "method_descent", "output_dir", "jobs", "vtk"});

  PresetOptions options;
  if (auto it = root.find("preset_options"); it != root.end()) {
    if (r.expect_object(*it, "preset_options")) {
      r.check_keys(*it, "preset_options", {"radius", "xi"});
      r.number(*it, "radius", "preset_options", options.radius);
      r.number(*it, "xi", "preset_options", options.xi);
    }
  }
  std::string preset_name;
  const bool has_preset = r.string(root, "preset", "", preset_name);
  if (has_preset) {
    r.guarded("preset", [&] { cfg.scenario = preset(preset_name, options); });
  } else {
    const auto sc = root.find("scenario");
    if (sc == root.end() || !sc->is_object() || !sc->contains("domain")) {
      r.fail("preset", "required unless scenario.domain is given");
    }
    cfg.scenario.name = "custom";
    cfg.scenario.source = named_function("one");
  }
  if (auto it = root.find("scenario"); it != root.end()) read_scenario(r, *it, "scenario", cfg.scenario);

  if (auto it = root.find("methods"); it == root.end()) {
    r.fail("methods", "required");
  } else if (!it->is_array() || it->empty()) {
    r.fail("methods", "expected a non-empty array");
  } else {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "methods[" + std::to_string(i) + "]";
      const json& m = (*it)[i];
      if (!m.is_string()) {
        r.fail(p, "expected a method name");
        continue;
      }
      r.guarded(p, [&] {
        const Method method = parse_method(m.get<std::string>());
        if (std::find(cfg.methods.begin(), cfg.methods.end(), method) != cfg.methods.end()) {
          throw ConfigError("duplicate method");
        }
        cfg.methods.push_back(method);
      });
    }
  }

  if (auto it = root.find("noise_levels"); it != root.end()) {
    cfg.noise_levels.clear();
    if (!it->is_array() || it->empty()) r.fail("noise_levels", "expected a non-empty array");
    else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        if (!v.is_number() || !(v.get<double>() >= 0.0) || !std::isfinite(v.get<double>())) {
          r.fail("noise_levels[" + std::to_string(i) + "]", "expected a finite number >= 0");
        } else {
          cfg.noise_levels.push_back(v.get<double>());
        }
      }
    }
  }
  if (auto it = root.find("seeds"); it != root.end()) {
    cfg.seeds.clear();
    if (!it->is_array() || it->empty()) r.fail("seeds", "expected a non-empty array");
    else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        if (!v.is_number_unsigned()) r.fail("seeds[" + std::to_string(i) + "]", "expected an unsigned integer");
        else cfg.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }

  r.string(root, "output_dir", "", cfg.output_dir);
  if (r.integer(root, "jobs", "", cfg.jobs) && cfg.jobs < 1) r.fail("jobs", "must be at least 1");
  r.boolean(root, "vtk", "", cfg.write_vtk);

  DescentConfig common_overrides;  // only used to validate keys once
  std::optional<bool> common_projection;
  const json* common = nullptr;
  if (auto it = root.find("descent"); it != root.end()) {
    common = &*it;
    read_descent(r, *it, "descent", common_overrides, common_projection);
  }
  std::map<Method, const json*> per_method;
  if (auto it = root.find("method_descent"); it != root.end() && r.expect_object(*it, "method_descent")) {
    for (const auto& [key, value] : it->items()) {
      r.guarded("method_descent." + key, [&] { per_method[parse_method(key)] = &value; });
    }
  }

  if (!r.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  cfg.scenario.validate();
  for (Method m : cfg.methods) {
    DescentConfig d = cfg.scenario.descent_for(m);
    std::optional<bool> projection;
    Reader quiet;
    if (common) read_descent(quiet, *common, "descent", d, projection);
    if (auto it = per_method.find(m); it != per_method.end()) {
      read_descent(r, *it->second, "method_descent." + std::string(to_string(m)), d, projection);
    }
    const bool project = projection.value_or(cfg.scenario.partition.has_value());
    if (project && !cfg.scenario.partition) {
      r.fail("descent.projection", "requires a scenario partition");
    }
    d.projection = project ? cfg.scenario.partition : std::nullopt;
    r.guarded("descent (" + std::string(to_string(m)) + ")", [&] { d.validate(); });
    cfg.descent[m] = d;
  }
  for (const auto& [m, j] : per_method) {
    if (std::find(cfg.methods.begin(), cfg.methods.end(), m) == cfg.methods.end()) {
      r.fail("method_descent." + std::string(to_string(m)), "method is not listed in methods");
    }
  }
  if (!r.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

bool ExperimentSummary::any_failed() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed; });
}

std::string run_stem(Method method, double noise, std::uint64_t seed) {
  return std::string(to_string(method)) + "_noise" + format_shortest(noise) + "_seed" + std::to_string(seed);
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  const Scenario sc = build_scenario(config.scenario, config.synthesis);
  const bool write = !config.output_dir.empty();
  const std::filesystem::path dir(config.output_dir);
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + config.output_dir + "': " + ec.message());
  }

  ExperimentSummary summary;
  for (Method m : config.methods) {
    for (double noise : config.noise_levels) {
      for (std::uint64_t seed : config.seeds) {
        RunRecord rec;
        rec.method = m;
        rec.noise = noise;
        rec.seed = seed;
        rec.stem = run_stem(m, noise, seed);
        summary.runs.push_back(std::move(rec));
      }
    }
  }

  auto execute = [&](RunRecord& rec) {
    try {
      const CauchyData cauchy = add_noise(sc.synthesis.cauchy, sc.synthesis.state_sup, rec.noise, rec.seed);
      DescentConfig dc = config.descent.at(rec.method);
      dc.seed = rec.seed;
      const InversionResult res = run_inversion(sc.mesh, sc.data, cauchy, sc.alpha0, dc, sc.alpha_star);
      rec.failed = res.failed;
      rec.stalled = res.stalled;
      rec.message = res.message;
      rec.iterations = static_cast<int>(res.history.size());
      rec.errors = error_metrics(res.alpha, sc.alpha_star, sc.mesh);
      if (write) {
        const auto base = (dir / rec.stem).string();
        write_history_csv(res.history, base + "_history.csv");
        write_coefficient_csv(sc.mesh, res.alpha, base + "_alpha.csv");
        write_measurement_csv(sc.mesh, cauchy, base + "_measurement.csv");
        if (config.write_vtk) emit_field_vtk(sc.mesh, res.alpha.values, FieldLocation::cell, base + "_alpha.vtk");
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.message = e.what();
    }
  };

  const std::size_t n = summary.runs.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.jobs)), n);
  if (workers <= 1) {
    for (auto& rec : summary.runs) execute(rec);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) execute(summary.runs[i]);
      });
    }
  }

  std::vector<RunOutcome> outcomes;
  for (const auto& rec : summary.runs) {
    if (rec.errors) outcomes.push_back({rec.method, rec.noise, rec.seed, rec.errors->region_values, rec.failed});
  }
  const ErrorMetrics exact = error_metrics(sc.alpha_star, sc.alpha_star, sc.mesh);
  summary.table = build_comparison_table(outcomes, exact.region_exact);

  if (write) {
    const std::string name = config.scenario.name.empty() ? "scenario" : config.scenario.name;
    summary.table.write_csv((dir / (name + "_table.csv")).string());
    const auto runs_path = (dir / "runs.csv").string();
    std::ofstream out(runs_path);
    if (!out) throw IoError("cannot open '" + runs_path + "' for writing");
    out << "method,noise,seed,status,iterations,avg_abs_err,avg_rel_err,message\n";
    for (const auto& rec : summary.runs) {
      out << to_string(rec.method) << ',' << format_shortest(rec.noise) << ',' << rec.seed << ','
          << (rec.failed ? "failed" : rec.stalled ? "stalled" : "ok") << ',' << rec.iterations << ',';
      if (rec.errors) out << format_shortest(rec.errors->avg_abs_error) << ',' << format_shortest(rec.errors->avg_rel_error);
      else out << ',';
      out << ',' << sanitize_field(rec.message) << '\n';
    }
    if (!out) throw IoError("failed writing '" + runs_path + "'");
  }
  return summary;
}

std::vector<GradientCheck> gradient_check(const ExperimentConfig& config, int directions, double tolerance,
                                          std::uint64_t seed) {
  if (directions < 1) throw ArgumentError("gradient check needs at least one direction");
  const Scenario sc = build_scenario(config.scenario, config.synthesis);
  const CounterNormal rng(seed);
  std::uint64_t counter = 0;
  auto uniform = [&] { return 2.0 * rng.uniform(counter++) - 1.0; };

  CoefficientField alpha = sc.alpha0;
  for (std::size_t t = 0; t < alpha.size(); ++t) alpha[t] *= 1.0 + 0.1 * uniform();
  std::vector<Eigen::VectorXd> dirs;
  for (int d = 0; d < directions; ++d) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(alpha.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform();
    dirs.push_back(std::move(v));
  }

  std::vector<GradientCheck> out;
  for (Method m : config.methods) {
    GradientCheck check{m, directions, 0.0, false, {}};
    const Weights w = config.descent.at(m).weights;
    try {
      const GradientDensity grad = gradient(m, sc.mesh, alpha, sc.data, sc.synthesis.cauchy, w);
      for (const auto& dir : dirs) {
        const double analytic = l2_inner(sc.mesh, grad, dir);
        double best = std::numeric_limits<double>::infinity();
        for (double h : {1e-3, 1e-4, 1e-5, 1e-6}) {
          const CoefficientField plus(alpha.values + h * dir);
          const CoefficientField minus(alpha.values - h * dir);
          const double fd = (cost(m, sc.mesh, plus, sc.data, sc.synthesis.cauchy, w).total -
                             cost(m, sc.mesh, minus, sc.data, sc.synthesis.cauchy, w).total) /
                            (2.0 * h);
          best = std::min(best, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300));
        }
        check.max_rel_error = std::max(check.max_rel_error, best);
      }
      check.passed = check.max_rel_error <= tolerance;
    } catch (const Error& e) {
      check.max_rel_error = std::numeric_limits<double>::infinity();
      check.message = e.what();
    }
    out.push_back(std::move(check));
  }
  return out;
}

}  // namespace recon
