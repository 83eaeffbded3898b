#include <cstdlib>
#include <random>

#include "doctest.h"
#include "spinnwave/loss.hpp"
#include "support/exact_networks.hpp"
#include "support/oracles.hpp"

using namespace spinnwave;

namespace {

Mlp constant_network(int input_dim, double c) {
  Mlp p = init_mlp(3, 4, input_dim, 0);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  p.biases.back()(0) = c;
  return p;
}

double variance(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace

TEST_SUITE("loss") {
  TEST_CASE("exact-solution network has near-zero loss") {
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp u = testing::manufactured_network();
    const SampleSet s = sample_uniform(prob.domain, UniformSampling{200, 20, 20, 200, false}, 1);
    for (auto bh : {BoundaryH1::Tangential, BoundaryH1::AllCoords}) {
      const LossBreakdown e = empirical_loss(u, prob, s, {LossMode::Spinn, bh});
      CHECK(e.total <= 1e-10);
      const LossBreakdown q = population_loss(u, prob, 64, {LossMode::Spinn, bh});
      CHECK(q.total <= 1e-10);
    }
  }

  TEST_CASE("zero network initial term matches the analytic integral") {
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp z = constant_network(2, 0.0);
    // integral over [0, 1] of sin^2(pi x) + pi^2 cos^2(pi x)
    const double oracle = 0.5 + M_PI * M_PI / 2.0;
    const LossBreakdown q = population_loss(z, prob, 256, {});
    CHECK(q.init_pos == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(q.residual == 0.0);
    CHECK(q.init_vel == 0.0);
    CHECK(q.boundary == 0.0);
    const SampleSet s = sample_uniform(prob.domain, 20000, 2, 1, 3);
    const LossBreakdown e = empirical_loss(z, prob, s, {});
    CHECK(std::abs(e.init_pos - oracle) <= 0.1);
    const LossBreakdown pinn = empirical_loss(z, prob, s, {LossMode::Pinn, BoundaryH1::Tangential});
    CHECK(e.init_pos >= pinn.init_pos);
    CHECK(pinn.init_pos == doctest::Approx(0.5).epsilon(0.05));
  }

  TEST_CASE("constant network has zero residual term") {
    const WaveProblem prob = problem_manufactured_1d();
    const LossBreakdown q = population_loss(constant_network(2, 0.7), prob, 32, {});
    CHECK(q.residual == 0.0);
    CHECK(q.boundary > 0.0);
  }

  TEST_CASE("total is the ordered sum of the four terms") {
    std::mt19937_64 rng(2);
    const WaveProblem prob = problem_1d_paper();
    const Mlp p = testing::random_network(rng, 3, 6, 2);
    const SampleSet s = sample_uniform(prob.domain, 30, 6, 4, 2);
    const LossBreakdown b = empirical_loss(p, prob, s, {});
    CHECK(b.total == ((b.residual + b.init_pos) + b.init_vel) + b.boundary);
    CHECK(b.residual >= 0.0);
    CHECK(b.boundary >= 0.0);
    CHECK(b.mode == LossMode::Spinn);
  }

  TEST_CASE("SPINN total dominates PINN total") {
    std::mt19937_64 rng(3);
    for (const auto& name : problem_names()) {
      const WaveProblem prob = problem_by_name(name);
      for (int i = 0; i < 5; ++i) {
        const Mlp p = testing::random_network(rng, 3, 5, prob.dim() + 1);
        const SampleSet s = sample_uniform(prob.domain, 12, 8, 3, i);
        const auto sp = empirical_loss(p, prob, s, {LossMode::Spinn, BoundaryH1::Tangential});
        const auto pi = empirical_loss(p, prob, s, {LossMode::Pinn, BoundaryH1::Tangential});
        CHECK(sp.total >= pi.total);
        CHECK(sp.residual == pi.residual);
        CHECK(sp.init_vel == pi.init_vel);
      }
    }
  }

  TEST_CASE("gradient matches parameter finite differences") {
    std::mt19937_64 rng(4);
    for (const auto& name : problem_names()) {
      const WaveProblem prob = problem_by_name(name);
      for (auto mode : {LossMode::Spinn, LossMode::Pinn}) {
        Mlp p = testing::random_network(rng, 3, 4, prob.dim() + 1);
        fold_input_normalization(p, prob.domain);
        const SampleSet s = sample_uniform(prob.domain, 6, 4, 3, 9);
        const LossOptions opt{mode, BoundaryH1::Tangential};
        const Eigen::VectorXd g = loss_gradient(p, prob, s, opt).flatten();
        const Eigen::VectorXd theta = p.flatten();
        const double gscale = 1e-6 * std::max(1.0, g.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
          const double h = 1e-6 * (1.0 + std::abs(theta(i)));
          Eigen::VectorXd t = theta;
          Mlp q = p;
          t(i) += h;
          q.assign(t);
          const double fp = empirical_loss(q, prob, s, opt).total;
          t(i) -= 2.0 * h;
          q.assign(t);
          const double fm = empirical_loss(q, prob, s, opt).total;
          CHECK(testing::rel_err(g(i), (fp - fm) / (2.0 * h), gscale) <= 1e-5);
        }
      }
    }
  }

  TEST_CASE("gradient vanishes at the exact-solution network") {
    std::mt19937_64 rng(8);
    const Mlp u = testing::random_network(rng, 3, 6, 2);
    const WaveProblem prob = testing::problem_solved_by(u, problem_manufactured_1d().domain);
    const SampleSet s = sample_uniform(prob.domain, 50, 10, 10, 5);
    for (LossMode mode : {LossMode::Spinn, LossMode::Pinn}) {
      LossOptions opt;
      opt.mode = mode;
      CHECK(empirical_loss(u, prob, s, opt).total <= 1e-20);
      CHECK(loss_gradient(u, prob, s, opt).flatten().norm() <= 1e-8);
    }
  }

  TEST_CASE("interior weight scaling scales the residual gradient exactly") {
    std::mt19937_64 rng(5);
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp p = testing::random_network(rng, 3, 5, 2);
    LossGroups g = empirical_groups(sample_uniform(prob.domain, 10, 4, 4, 1));
    g.initial.scale = 0.0;
    g.boundary.scale = 0.0;
    const auto a = evaluate_loss(p, prob, g, {}, {true, false});
    g.interior.scale *= 2.0;
    const auto b = evaluate_loss(p, prob, g, {}, {true, false});
    CHECK(b.gradient.flatten() == 2.0 * a.gradient.flatten());
    CHECK(b.breakdown.residual == 2.0 * a.breakdown.residual);
  }

  TEST_CASE("loss is permutation invariant within groups") {
    std::mt19937_64 rng(6);
    const WaveProblem prob = problem_1d_paper();
    const Mlp p = testing::random_network(rng, 3, 6, 2);
    SampleSet s = sample_uniform(prob.domain, 40, 10, 10, 4);
    const double before = empirical_loss(p, prob, s, {}).total;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(s.n_interior());
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + perm.size(), rng);
    s.interior = s.interior * perm;
    CHECK(empirical_loss(p, prob, s, {}).total == doctest::Approx(before).epsilon(1e-12));
  }

  TEST_CASE("residual term equals the scaled mean squared residual") {
    std::mt19937_64 rng(7);
    const WaveProblem prob = problem_1d_paper();
    const Mlp p = testing::random_network(rng, 3, 6, 2);
    const SampleSet s = sample_uniform(prob.domain, 40, 10, 10, 4);
    const Eigen::VectorXd r = interior_residuals(p, prob, s);
    REQUIRE(r.size() == s.n_interior());
    CHECK((r.array() >= 0.0).all());
    const double oracle = prob.domain.volume() * prob.domain.T * r.mean();
    CHECK(empirical_loss(p, prob, s, {}).residual == doctest::Approx(oracle).epsilon(1e-13));
  }

  TEST_CASE("results do not depend on the thread count") {
    std::mt19937_64 rng(8);
    const WaveProblem prob = problem_2d_paper();
    const Mlp p = testing::random_network(rng, 3, 8, 3);
    const SampleSet s = sample_uniform(prob.domain, 100, 40, 10, 4);
    setenv("SPINNWAVE_THREADS", "1", 1);
    const auto a = evaluate_loss(p, prob, empirical_groups(s), {}, {true, true});
    setenv("SPINNWAVE_THREADS", "3", 1);
    const auto b = evaluate_loss(p, prob, empirical_groups(s), {}, {true, true});
    unsetenv("SPINNWAVE_THREADS");
    CHECK(a.breakdown.total == b.breakdown.total);
    CHECK(a.gradient == b.gradient);
    CHECK(a.residual_sq == b.residual_sq);
  }

  TEST_CASE("all_coords boundary mode needs the full gradient of g") {
    const WaveProblem prob = problem_1d_paper();
    const Mlp p = init_mlp(3, 4, 2, 0);
    const SampleSet s = sample_uniform(prob.domain, 5, 2, 2, 0);
    CHECK_THROWS_AS(empirical_loss(p, prob, s, {LossMode::Spinn, BoundaryH1::AllCoords}), std::invalid_argument);
    CHECK_NOTHROW(empirical_loss(p, prob, s, {LossMode::Pinn, BoundaryH1::AllCoords}));
  }

  TEST_CASE("mode and boundary names parse") {
    CHECK(parse_loss_mode("spinn") == LossMode::Spinn);
    CHECK(parse_loss_mode("pinn") == LossMode::Pinn);
    CHECK(parse_boundary_h1(to_string(BoundaryH1::AllCoords)) == BoundaryH1::AllCoords);
    CHECK_THROWS_AS(parse_loss_mode("vpinn"), std::invalid_argument);
    CHECK_THROWS_AS(quadrature_groups(Box::cube(1, 0.0, 1.0, 1.0), 1), std::invalid_argument);
  }

  TEST_CASE("Monte Carlo variance decays like 1/N") {
    std::mt19937_64 rng(9);
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp p = testing::random_network(rng, 3, 6, 2);
    std::vector<double> logN, logV;
    for (std::size_t N : {100, 1000, 10000}) {
      std::vector<double> vals;
      for (std::uint64_t seed = 0; seed < 40; ++seed)
        vals.push_back(empirical_loss(p, prob, sample_uniform(prob.domain, UniformSampling{N, N / 10, N / 100, N, false}, seed),
                                      {})
                           .total);
      logN.push_back(std::log(double(N)));
      logV.push_back(std::log(variance(vals)));
    }
    const double slope = (logV[2] - logV[0]) / (logN[2] - logN[0]);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.2));
  }

  TEST_CASE("empirical mean approaches the population loss") {
    std::mt19937_64 rng(10);
    const WaveProblem prob = problem_manufactured_1d();
    const Mlp p = testing::random_network(rng, 3, 6, 2);
    const double pop = population_loss(p, prob, 256, {}).residual;
    double mean = 0.0;
    std::vector<double> vals;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      vals.push_back(empirical_loss(p, prob, sample_uniform(prob.domain, 50, 5, 20, seed), {}).residual);
      mean += vals.back() / 100.0;
    }
    CHECK(std::abs(mean - pop) <= 4.0 * std::sqrt(variance(vals) / 100.0));
  }
}
