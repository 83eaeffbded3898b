#include "doctest.h"
#include "spinnwave/fdm.hpp"
#include "spinnwave/metrics.hpp"
#include "support/exact_networks.hpp"

using namespace spinnwave;

namespace {

Mlp zero_network(int input_dim) {
  Mlp p = init_mlp(3, 4, input_dim, 0);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  return p;
}

double l2_norm(const SpaceTimeGrid& g, const Eigen::MatrixXd& values) {
  return std::sqrt((spacetime_weights(g).array() * values.array().square()).sum());
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("relative L2 basic cases") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid exact = reference_from_exact(prob, 51, 51);
    CHECK(relative_l2(zero_network(2), exact) == 1.0);

    const Mlp u = init_mlp(3, 8, 2, 4);
    SpaceTimeGrid self = exact;
    self.values = evaluate_on_grid(u, exact);
    CHECK(relative_l2(u, self) == 0.0);
    CHECK(relative_l2(testing::scaled(u, 2.0), self) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(relative_l2(testing::scaled(u, -1.0), self) == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("relative L2 refuses a zero reference") {
    SpaceTimeGrid g = reference_from_exact(problem_manufactured_1d(), 5, 5);
    g.values.setZero();
    CHECK_THROWS_AS(relative_l2(zero_network(2), g), std::invalid_argument);
  }

  TEST_CASE("reference grid layout") {
    const SpaceTimeGrid g = reference_from_exact(problem_manufactured_1d(), 11, 5);
    CHECK(g.axes[0].size() == 11);
    CHECK(g.times.size() == 5);
    CHECK(g.values(5, 0) == doctest::Approx(1.0));
    CHECK(std::abs(g.values(5, 2)) <= 1e-15);
    CHECK_THROWS_AS(reference_from_exact(problem_1d_paper(), 11, 5), std::invalid_argument);
  }

  TEST_CASE("H1 error of a linear perturbation") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid grid = reference_from_exact(prob, 401, 11);
    for (double eps : {0.1, 0.01}) {
      const double h1 = h1_error(testing::manufactured_plus_linear(eps), prob, grid);
      CHECK(h1 == doctest::Approx(eps * std::sqrt(4.0 / 3.0)).epsilon(1e-4));
    }
    CHECK(h1_error(testing::manufactured_network(), prob, grid) <= 1e-5);
  }

  TEST_CASE("H1 error dominates the L2 error") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid grid = reference_from_exact(prob, 41, 41);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Mlp u = init_mlp(3, 8, 2, seed);
      const double l2 = relative_l2(u, grid) * l2_norm(grid, grid.values);
      CHECK(h1_error(u, prob, grid) >= l2);
    }
  }

  TEST_CASE("error report and pointwise field") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid grid = reference_from_exact(prob, 21, 21);
    const Mlp z = zero_network(2);
    const ErrorReport r = error_report(z, grid, prob, true);
    CHECK(r.rel_l2 == 1.0);
    CHECK(r.linf == doctest::Approx(1.0));
    REQUIRE(r.pointwise.has_value());
    CHECK(r.pointwise->values == grid.values.cwiseAbs());
    CHECK(r.h1_error > 0.0);
    const auto js = to_json(r);
    CHECK(js.at("rel_l2").get<double>() == 1.0);

    const WaveProblem bench = problem_1d_paper();
    const GridSolution fdm = solve_fdm(bench, FdmMesh{0.1, 0.0, 0.08, 5});
    const ErrorReport no_exact = error_report(init_mlp(3, 4, 2, 0), fdm.grid, bench, false);
    CHECK(no_exact.h1_error < 0.0);
    CHECK_FALSE(no_exact.pointwise.has_value());
  }

  TEST_CASE("metrics are stable under evaluation grid refinement") {
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp u = testing::manufactured_plus_linear(0.1);
    const double coarse = relative_l2(u, reference_from_exact(prob, 101, 101));
    const double fine = relative_l2(u, reference_from_exact(prob, 201, 201));
    CHECK(std::abs(coarse - fine) <= 0.01 * fine);
  }

  TEST_CASE("stability diagnostic on an exact fit") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid grid = reference_from_exact(prob, 101, 101);
    const StabilityReport s =
        stability_diagnostic(testing::manufactured_network(), prob, 1.0, 64, &grid, 2000, 1);
    CHECK(s.applicable);
    CHECK(s.satisfied);
    CHECK(s.loss_quad <= 1e-10);
    CHECK(s.h1_measured <= 1e-5);
    CHECK(s.c2_bound == doctest::Approx(M_PI * M_PI).epsilon(0.02));
    // gamma = C_T (1 + 3 sqrt(d) B |dOmega| T) with d = 1, |dOmega| = 2, T = 1
    CHECK(s.gamma == doctest::Approx(1.0 + 6.0 * s.c2_bound).epsilon(1e-14));
    CHECK(s.bound == doctest::Approx(s.gamma * std::sqrt(s.loss_quad)));
  }

  TEST_CASE("stability diagnostic is informational for large losses") {
    const WaveProblem prob = problem_manufactured_1d();
    const SpaceTimeGrid grid = reference_from_exact(prob, 21, 21);
    const StabilityReport s = stability_diagnostic(zero_network(2), prob, 1.0, 32, &grid, 100, 1);
    CHECK(s.loss_quad >= 1.0);
    CHECK_FALSE(s.applicable);
    CHECK(s.gamma == 1.0);
    const auto js = to_json(s);
    CHECK(js.at("applicable").get<bool>() == false);
  }
}
