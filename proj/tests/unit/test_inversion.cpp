#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "recon/errors.hpp"
#include "recon/inversion.hpp"

using namespace recon;

namespace {

double pringle(Point p) { return 1.0 + 0.5 * p.x * p.y; }

struct Problem {
  TriMesh mesh = build_disk_mesh({0, 0}, 1.0, 4);
  ScalarData data = ScalarData::make(mesh, {0, 0}, 1.0, 1.0);
  CauchyData cauchy;
  CoefficientField alpha0 = CoefficientField::constant(mesh, 1.0);

  Problem() {
    const auto fine = refine_uniform(mesh, 2);
    cauchy = synthesize_cauchy_data(CoefficientField::from_function(fine, pringle),
                                    ScalarData::make(fine, {0, 0}, 1.0, 1.0), [](Point) { return 1.0; }, fine, mesh)
                 .cauchy;
  }
};

double seminorm(const TriMesh& m, const Eigen::VectorXd& g) { return norms(g, m).h1_semi; }

}  // namespace

TEST_SUITE("inversion") {
  TEST_CASE("constant densities are fixed points of the smoother") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 5);
    for (double mu : {0.0, 1e-6, 1e-3, 1e-2, 1.0, 10.0}) {
      const auto g = sobolev_smooth(m, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m.num_triangles()), 2.5), mu);
      CHECK((g.array() - 2.5).abs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("smoothing seminorm is non-increasing in mu") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 5);
    oracle::Gen gen(17);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd d = gen.vector(static_cast<Eigen::Index>(m.num_triangles()), -1, 1);
      double prev = INFINITY;
      for (double mu : {1e-6, 1e-3, 1e-2, 1.0, 10.0}) {
        const double s = seminorm(m, SobolevSmoother(m, mu)(d));
        CHECK(s <= prev * (1.0 + 1e-12));
        prev = s;
      }
    }
  }

  TEST_CASE("restriction to cells") {
    const auto m = build_square_mesh(0, 1, 0, 1, 3);
    const auto cells = restrict_to_cells(m, interpolate(m, [](Point p) { return p.x + 2 * p.y; }));
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const Point c = m.centroid(t);
      CHECK(cells[static_cast<Eigen::Index>(t)] == doctest::Approx(c.x + 2 * c.y));
    }
  }

  TEST_CASE("descent step") {
    const auto m = build_square_mesh(0, 1, 0, 1, 2);
    const auto n = static_cast<Eigen::Index>(m.num_nodes());
    const auto a = CoefficientField::constant(m, 2.0);
    DescentConfig cfg;
    CHECK(descent_step(a, Eigen::VectorXd::Zero(n), m, cfg, 0.0, 0.5).values == a.values);
    CHECK(descent_step(a, Eigen::VectorXd::Zero(n), m, cfg, 0.1, 0.5).values.isApprox(a.values * (1 - 0.05)));
    cfg.tikhonov_sign = TikhonovSign::plus;
    CHECK(descent_step(a, Eigen::VectorXd::Zero(n), m, cfg, 0.1, 0.5).values.isApprox(a.values * (1 + 0.05)));
    cfg.update_rule = UpdateRule::smoothed_full;
    CHECK(descent_step(a, Eigen::VectorXd::Ones(n), m, cfg, 0.1, 0.5).values.isApprox(Eigen::VectorXd(a.values.array() - 0.5)));
    cfg.bounds = std::pair{1.8, 3.0};
    CHECK(descent_step(a, Eigen::VectorXd::Ones(n), m, cfg, 0.0, 1.0).values.minCoeff() == 1.8);
  }

  TEST_CASE("update rules coincide when they should") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 5;
    cfg.weights.rho = 0.0;
    cfg.update_rule = UpdateRule::smoothed_full;
    const auto full = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    cfg.update_rule = UpdateRule::smoothed_misfit_plus_raw_tikhonov;
    const auto split = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    CHECK((full.alpha.values - split.alpha.values).cwiseAbs().maxCoeff() == 0.0);

    cfg.mu = 0.0;
    cfg.weights.rho = 0.01;
    const auto zero_mu = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    cfg.mu = 5.0;
    cfg.update_rule = UpdateRule::l2_conventional;
    const auto conventional = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    CHECK((zero_mu.alpha.values - conventional.alpha.values).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("armijo on a one-dimensional quadratic") {
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
    const Eigen::VectorXd grad = 2.0 * x;
    const auto r = armijo_search(x, -grad, f(x), grad, f, ArmijoParams{});
    CHECK(r.t == 0.5);
    CHECK(r.cost == 0.0);
    CHECK_FALSE(r.stalled);

    ArmijoParams zero_c1;
    zero_c1.c1 = 0.0;
    const auto up = armijo_search(x, grad, f(x), grad, f, zero_c1);
    CHECK(up.degenerate);
    CHECK(up.t == zero_c1.t_min);
  }

  TEST_CASE("armijo rejects non-finite and throwing trials") {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(1, 2.0);
    auto f = [](const Eigen::VectorXd& v) {
      if (v[0] < 0.0) throw SolverError("negative");
      return v[0] >= 1.0 ? v.squaredNorm() : NAN;
    };
    const auto r = armijo_search(x, -grad, 1.0, grad, f, ArmijoParams{});
    CHECK(r.stalled);
  }

  TEST_CASE("pick-a-point projection") {
    const auto part = PartitionSpec::quadrants({0, 0}, 0.5);
    const auto m = assign_regions(build_square_mesh(-1, 1, -1, 1, 8), part);
    oracle::Gen gen(2);
    const PiecewiseProjector proj(m, part);
    for (int trial = 0; trial < 10; ++trial) {
      const CoefficientField a(gen.vector(static_cast<Eigen::Index>(m.num_triangles()), 0.1, 3.0));
      const auto once = proj(a);
      CHECK(proj(once).values == once.values);
      std::set<double> distinct(once.values.data(), once.values.data() + once.values.size());
      CHECK(distinct.size() <= 4);
      const auto vals = proj.region_values(a);
      for (int r = 0; r < 4; ++r) {
        const int t = m.locate(part.sample_points[static_cast<std::size_t>(r)]);
        CHECK(vals[static_cast<std::size_t>(r)] == a[static_cast<std::size_t>(t)]);
      }
    }
    auto outside = part;
    outside.sample_points[0] = {5.0, 5.0};
    CHECK_THROWS_AS(PiecewiseProjector(m, outside), ConfigError);
  }

  TEST_CASE("balancing arithmetic") {
    const auto a = update_rho_balancing(1.0, 1.0, 2.0, 0.0);
    CHECK(a.rho == 1.0);
    CHECK(a.residual == 0.0);
    const auto b = update_rho_balancing(2.0, 4.0, 1.5, 0.0);
    CHECK(b.rho == 0.25);
    CHECK(b.residual == 0.0);
    const auto held = update_rho_balancing(2.0, 0.0, 1.5, 0.7);
    CHECK(held.held);
    CHECK(held.rho == 0.7);
    CHECK_FALSE(held.warning.empty());
    CHECK_THROWS_AS(update_rho_balancing(1.0, 1.0, 1.0, 0.0), ArgumentError);
  }

  TEST_CASE("k_max zero returns the initial guess") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 0;
    const auto r = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    CHECK(r.history.empty());
    CHECK(r.alpha.values == p.alpha0.values);
    CHECK_FALSE(r.failed);
  }

  TEST_CASE("config validation") {
    DescentConfig cfg;
    cfg.k_max = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.rho_schedule = RhoSchedule::balancing;
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.weights = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.bounds = std::pair{2.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(parse_update_rule(to_string(UpdateRule::l2_conventional)) == UpdateRule::l2_conventional);
  }

  TEST_CASE("runs are deterministic") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 10;
    cfg.step_kind = StepKind::armijo;
    const auto a = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    const auto b = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    std::ostringstream ha, hb;
    write_history_csv(a.history, ha);
    write_history_csv(b.history, hb);
    CHECK(ha.str() == hb.str());
    CHECK(a.alpha.values == b.alpha.values);
  }

  TEST_CASE("armijo gives a monotone cost history and the stationarity bound") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 50;
    cfg.step_kind = StepKind::armijo;
    cfg.armijo.t_min = 1e-6;
    const auto r = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    REQUIRE_FALSE(r.failed);
    REQUIRE(r.history.size() >= 2);
    double min_cost = r.history.front().cost.total, min_grad = INFINITY;
    for (std::size_t k = 0; k < r.history.size(); ++k) {
      CHECK(r.history[k].k == static_cast<int>(k));
      if (k > 0) CHECK(r.history[k].cost.total <= r.history[k - 1].cost.total);
      min_cost = std::min(min_cost, r.history[k].cost.total);
      min_grad = std::min(min_grad, r.history[k].grad_norm);
    }
    const double bound = (r.history.front().cost.total - min_cost) / (cfg.armijo.t_min * cfg.k_max);
    CHECK(min_grad <= bound);
  }

  TEST_CASE("balancing residual is zero whenever it fires") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 20;
    cfg.rho_schedule = RhoSchedule::balancing;
    cfg.gamma = 1.5;
    const auto r = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg);
    REQUIRE_FALSE(r.failed);
    int fired = 0;
    for (const auto& rec : r.history) {
      if (!rec.balancing_residual) continue;
      ++fired;
      CHECK(*rec.balancing_residual == 0.0);
    }
    CHECK(fired == cfg.k_max);
  }

  TEST_CASE("history csv") {
    Problem p;
    DescentConfig cfg;
    cfg.k_max = 3;
    const auto r = run_inversion(p.mesh, p.data, p.cauchy, p.alpha0, cfg, CoefficientField::from_function(p.mesh, pringle));
    std::ostringstream out;
    write_history_csv(r.history, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("k,cost_total,cost_misfit,cost_reg,grad_norm,step,rho", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 3);
  }
}
