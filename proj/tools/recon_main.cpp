#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "recon/errors.hpp"
#include "recon/experiment.hpp"
#include "recon/mesh_io.hpp"

namespace {

constexpr int kExitRunFailed = 1;
constexpr int kExitUsage = 2;

int cmd_run(const std::string& config_path, const std::string& out_dir, int jobs) {
  recon::ExperimentConfig cfg = recon::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (jobs > 0) cfg.jobs = jobs;
  const recon::ExperimentSummary summary = recon::run_experiment(cfg);
  for (const auto& rec : summary.runs) {
    std::printf("%-40s %-7s it=%-5d", rec.stem.c_str(), rec.failed ? "FAILED" : rec.stalled ? "stalled" : "ok",
                rec.iterations);
    if (rec.errors) std::printf(" avg_abs=%.6g avg_rel=%.6g", rec.errors->avg_abs_error, rec.errors->avg_rel_error);
    if (rec.failed) std::printf("  %s", rec.message.c_str());
    std::printf("\n");
  }
  if (!cfg.output_dir.empty()) std::printf("outputs written to %s\n", cfg.output_dir.c_str());
  return summary.any_failed() ? kExitRunFailed : 0;
}

int cmd_mesh(const std::string& name, int refine, int resolution, const std::string& out) {
  recon::ScenarioSpec spec = recon::preset(name);
  if (resolution > 0) spec.resolution = resolution;
  recon::TriMesh mesh = recon::refine_uniform(recon::build_domain_mesh(spec.domain, spec.resolution), refine);
  if (spec.partition) mesh = recon::assign_regions(mesh, *spec.partition);
  recon::write_mesh(mesh, out);
  std::printf("%zu nodes, %zu triangles -> %s\n", mesh.num_nodes(), mesh.num_triangles(), out.c_str());
  return 0;
}

int cmd_gradcheck(const std::string& config_path) {
  const recon::ExperimentConfig cfg = recon::load_experiment_config(config_path);
  bool all = true;
  for (const auto& c : recon::gradient_check(cfg)) {
    std::printf("%-5s %s max_rel_err=%.3e over %d directions", std::string(recon::to_string(c.method)).c_str(),
                c.passed ? "PASS" : "FAIL", c.max_rel_error, c.directions);
    if (!c.message.empty()) std::printf("  %s", c.message.c_str());
    std::printf("\n");
    all = all && c.passed;
  }
  return all ? 0 : kExitRunFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion coefficient reconstruction from Cauchy data"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset_name, mesh_out;
  int jobs = 0, refine = 0, resolution = 0;

  auto* run = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  run->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Concurrent runs (overrides the config)")->check(CLI::PositiveNumber);

  auto* mesh = app.add_subcommand("mesh", "Write the inversion mesh of a preset");
  mesh->add_option("--preset", preset_name, "Preset name")->required();
  mesh->add_option("--refine", refine, "Uniform refinements")->check(CLI::NonNegativeNumber);
  mesh->add_option("--resolution", resolution, "Override the preset resolution")->check(CLI::PositiveNumber);
  mesh->add_option("--out", mesh_out, "Output mesh file")->required();

  auto* grad = app.add_subcommand("gradcheck", "Compare adjoint gradients with finite differences");
  grad->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);

  app.add_subcommand("version", "Print the version");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, jobs);
    if (*mesh) return cmd_mesh(preset_name, refine, resolution, mesh_out);
    if (*grad) return cmd_gradcheck(config_path);
    std::printf("recon %s\n", RECON_VERSION);
    return 0;
  } catch (const recon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const recon::ParseError& e) {
    std::cerr << "config parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const recon::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
}
