#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "recon/errors.hpp"
#include "recon/forward.hpp"

using namespace recon;

namespace {

CauchyData cauchy_from(const TriMesh& m, ScalarFunction f, ScalarFunction g) {
  CauchyData c;
  c.f = sample_boundary(m, f);
  c.g = sample_boundary(m, g);
  return c;
}

}  // namespace

TEST_SUITE("forward") {
  TEST_CASE("constant CCBM solution") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 5);
    const auto data = ScalarData::make(m, {0, 0}, 1.0, 1.0);
    const auto u = solve_ccbm_state(m, CoefficientField::constant(m, 1.0), data,
                                    cauchy_from(m, [](Point) { return 1.0; }, [](Point) { return 0.0; }));
    CHECK((u.array() - Complex(1.0, 0.0)).abs().maxCoeff() < 1e-10);
  }

  TEST_CASE("linear and constant manufactured solutions") {
    const auto m = build_square_mesh(-1, 1, -1, 1, 7);
    const auto one = CoefficientField::constant(m, 1.0);
    const auto data_x = ScalarData::make(m, {0, 0}, 1.0, [](Point p) { return p.x; });
    const auto ud = solve_dirichlet_state(m, one, data_x, sample_boundary(m, [](Point p) { return p.x; }));
    CHECK((ud - interpolate(m, [](Point p) { return p.x; })).cwiseAbs().maxCoeff() < 1e-10);

    const auto data_1 = ScalarData::make(m, {0, 0}, 1.0, 1.0);
    const auto un = solve_neumann_state(m, one, data_1, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.boundary_nodes().size())));
    CHECK((un.array() - 1.0).abs().maxCoeff() < 1e-10);
  }

  TEST_CASE("quadratic manufactured solution converges at second order") {
    auto exact = [](Point p) { return p.x * p.x + p.y * p.y; };
    std::vector<double> errors;
    for (int level = 0; level < 4; ++level) {
      const auto m = refine_uniform(build_square_mesh(-1, 1, -1, 1, 4), level);
      const auto data = ScalarData::make(m, {0, 0}, 1.0, [&](Point p) { return -4.0 + exact(p); });
      const auto u = solve_dirichlet_state(m, CoefficientField::constant(m, 1.0), data, sample_boundary(m, exact));
      errors.push_back(oracle::l2_error_quadrature(m, u, exact));
    }
    for (std::size_t k = 1; k < errors.size(); ++k) CHECK(std::log2(errors[k - 1] / errors[k]) >= 1.8);
  }

  TEST_CASE("pure Neumann compatibility") {
    const auto m = build_square_mesh(-1, 1, -1, 1, 6);
    const auto one = CoefficientField::constant(m, 1.0);
    const auto data = ScalarData::make(m, {0, 0}, 0.0, 1.0);
    const auto nb = static_cast<Eigen::Index>(m.boundary_nodes().size());
    CHECK_THROWS_AS(solve_neumann_state(m, one, data, Eigen::VectorXd::Zero(nb)), WellPosednessError);
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(nb, -m.total_area() / m.boundary_length());
    const auto u = solve_neumann_state(m, one, data, g);
    CHECK(std::abs(Eigen::VectorXd::Ones(u.size()).dot(assemble_boundary_mass(m) * u)) < 1e-10);
  }

  TEST_CASE("consistent same-mesh data makes the imaginary part vanish") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 6);
    const auto a = CoefficientField::from_function(m, [](Point p) { return 1.0 + 0.5 * p.x * p.y; });
    const auto data = ScalarData::make(m, {0, 0}, 1.0, 1.0);
    const auto syn = synthesize_cauchy_data(a, data, [](Point) { return 1.0; }, m, m, {.allow_inverse_crime = true});
    const auto u = solve_ccbm_state(m, a, data, syn.cauchy);
    const auto ui = norms(Eigen::VectorXd(u.imag()), m).h1;
    const auto ur = norms(Eigen::VectorXd(u.real()), m).h1;
    CHECK(ui / ur <= 1e-8);
    const auto ud = solve_dirichlet_state(m, a, data, syn.cauchy.f);
    CHECK((Eigen::VectorXd(u.real()) - ud).cwiseAbs().maxCoeff() <= 1e-8);
  }

  TEST_CASE("adjoint") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 4);
    const auto a = CoefficientField::constant(m, 1.2);
    const auto data = ScalarData::make(m, {0, 0}, 1.0, 1.0);
    const auto n = static_cast<Eigen::Index>(m.num_nodes());
    CHECK(solve_ccbm_adjoint(m, a, data, Eigen::VectorXd::Zero(n), 1.0, 1.0).norm() == 0.0);
  }

  TEST_CASE("adjoint duality with the linearized state") {
    oracle::Gen gen(4);
    const auto m = build_disk_mesh({0, 0}, 1.0, 5);
    const CoefficientField a(gen.vector(static_cast<Eigen::Index>(m.num_triangles()), 0.8, 1.6));
    const auto data = ScalarData::make(m, {0, 0}, 1.0, 1.0);
    const auto c = cauchy_from(m, [](Point p) { return 1.0 + 0.2 * p.x; }, [](Point) { return 1.0; });
    const Eigen::VectorXcd u = solve_ccbm_state(m, a, data, c);
    const Eigen::VectorXd ui = u.imag();
    const double w0 = 0.7, w1 = 1.3;
    const Eigen::VectorXcd p = solve_ccbm_adjoint(m, a, data, ui, w0, w1);

    const CoefficientField da(gen.vector(static_cast<Eigen::Index>(m.num_triangles()), -1, 1));
    const Eigen::MatrixXcd A = Eigen::MatrixXcd(assemble_ccbm_matrix(m, a, data));
    const Eigen::MatrixXd Kda = oracle::dense_stiffness(m, da.values);
    const Eigen::VectorXcd rhs = -(Kda.cast<Complex>() * u);
    const Eigen::VectorXcd du = oracle::dense_solve<Complex>(A, rhs);

    const Complex lhs = p.dot(A * du);  // p^H A u'
    const Eigen::VectorXd r = w0 * (oracle::dense_mass(m) * ui) + w1 * (oracle::dense_stiffness(m, Eigen::VectorXd::Ones(a.values.size())) * ui);
    const Complex rhs_val = r.cast<Complex>().dot(du);
    CHECK(std::abs(lhs - rhs_val) <= 1e-10 * std::max(1.0, std::abs(rhs_val)));
  }

  TEST_CASE("synthesis") {
    const auto coarse = build_disk_mesh({0, 0}, 1.0, 4);
    const auto fine = refine_uniform(coarse, 2);
    const auto fine_data = ScalarData::make(fine, {0, 0}, 1.0, 1.0);
    const auto syn = synthesize_cauchy_data(CoefficientField::constant(fine, 1.0), fine_data,
                                            [](Point) { return 0.0; }, fine, coarse);
    CHECK((syn.cauchy.f.array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK(syn.state_sup == doctest::Approx(1.0));

    CHECK_THROWS_AS(synthesize_cauchy_data(CoefficientField::constant(coarse, 1.0),
                                           ScalarData::make(coarse, {0, 0}, 1.0, 1.0), [](Point) { return 0.0; },
                                           coarse, coarse),
                    InverseCrimeError);
    CHECK_NOTHROW(synthesize_cauchy_data(CoefficientField::constant(coarse, 1.0),
                                         ScalarData::make(coarse, {0, 0}, 1.0, 1.0), [](Point) { return 0.0; },
                                         coarse, coarse, {.allow_inverse_crime = true}));
  }

  TEST_CASE("synthesized trace is stable under fine refinement") {
    auto astar = [](Point p) { return 1.0 + 0.5 * p.x * p.y; };
    const auto coarse = build_disk_mesh({0, 0}, 1.0, 6);
    Eigen::VectorXd prev;
    for (int levels : {2, 3}) {
      const auto fine = refine_uniform(coarse, levels);
      const auto syn = synthesize_cauchy_data(CoefficientField::from_function(fine, astar),
                                              ScalarData::make(fine, {0, 0}, 1.0, 1.0), [](Point) { return 1.0; },
                                              fine, coarse);
      if (prev.size()) CHECK((syn.cauchy.f - prev).cwiseAbs().maxCoeff() <= 1e-3 * prev.cwiseAbs().maxCoeff());
      prev = syn.cauchy.f;
    }
  }

  TEST_CASE("noise model") {
    CauchyData clean;
    clean.f = Eigen::VectorXd::LinSpaced(100, 0.5, 1.5);
    clean.g = Eigen::VectorXd::Ones(100);
    const auto same = add_noise(clean, 2.0, 0.0, 9);
    CHECK(same.f.size() == clean.f.size());
    CHECK(std::memcmp(same.f.data(), clean.f.data(), sizeof(double) * 100) == 0);
    const auto n1 = add_noise(clean, 2.0, 0.01, 9);
    const auto n2 = add_noise(clean, 2.0, 0.01, 9);
    CHECK(std::memcmp(n1.f.data(), n2.f.data(), sizeof(double) * 100) == 0);
    CHECK((n1.g - clean.g).norm() == 0.0);
    CHECK(n1.noise_level == 0.01);
    CHECK_THROWS_AS(add_noise(clean, 2.0, -0.1, 9), ArgumentError);
  }

  TEST_CASE("noise statistics") {
    CauchyData clean;
    clean.f = Eigen::VectorXd::Constant(200000, 2.0);
    clean.g = Eigen::VectorXd::Zero(200000);
    const double delta = 0.01, sup = 1.5;
    const auto noisy = add_noise(clean, sup, delta, 11);
    const Eigen::ArrayXd eta = (noisy.f.array() / clean.f.array() - 1.0) / delta;
    const double mean = eta.mean();
    const double sd = std::sqrt((eta - mean).square().sum() / static_cast<double>(eta.size() - 1));
    CHECK(std::abs(mean) < 5.0 * sup / std::sqrt(static_cast<double>(eta.size())));
    CHECK(std::abs(sd / sup - 1.0) < 0.02);
  }

  TEST_CASE("measurement csv") {
    const auto m = build_disk_mesh({0, 0}, 1.0, 2);
    const auto c = cauchy_from(m, [](Point p) { return p.x; }, [](Point) { return 1.0; });
    std::stringstream ss;
    write_measurement_csv(m, c, ss);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "node_index,x,y,f,g");
    int rows = 0;
    for (std::string line; std::getline(ss, line);) ++rows;
    CHECK(rows == static_cast<int>(m.boundary_nodes().size()));
  }
}
