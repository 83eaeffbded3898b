#include <random>

#include "doctest.h"
#include "spinnwave/problem.hpp"

using namespace spinnwave;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}
}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("1D benchmark problem data") {
    const WaveProblem p = problem_1d_paper();
    CHECK(p.name == "wave1d_paper");
    CHECK(p.dim() == 1);
    CHECK(p.domain.lo(0) == -2.0);
    CHECK(p.domain.hi(0) == 2.0);
    CHECK(p.domain.T == 8.0);
    CHECK(p.boundary(v1(-2.0), 0.0) == 0.0);
    CHECK(p.boundary(v1(-2.0), 0.625) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.boundary(v1(2.0), 0.625) == 0.0);
    CHECK(p.boundary_dt(v1(-2.0), 0.0) == doctest::Approx(0.8 * M_PI));
    CHECK(p.boundary_dt(v1(-2.0), 1.3) == doctest::Approx(0.8 * M_PI * std::cos(0.8 * M_PI * 1.3)));
    CHECK(p.boundary_dt(v1(2.0), 1.3) == 0.0);
    for (double x : {-1.9, -0.3, 0.0, 1.7}) {
      CHECK(p.initial_position(v1(x)) == 0.0);
      CHECK(p.initial_velocity(v1(x)) == 0.0);
      CHECK(p.initial_position_grad(v1(x))(0) == 0.0);
      CHECK(p.source(v1(x), 2.5) == 0.0);
    }
    CHECK_FALSE(p.exact.has_value());
  }

  TEST_CASE("2D benchmark problem data") {
    const WaveProblem p = problem_2d_paper();
    CHECK(p.dim() == 2);
    CHECK(p.domain.T == 1.0);
    CHECK(p.initial_position(v2(0.25, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.initial_position(v2(1.5, 0.0)) == 0.0);
    CHECK(std::abs(p.initial_position(v2(1.0, 0.0))) <= 1e-15);
    CHECK(p.initial_position_grad(v2(0.0, 0.0)).isZero(0.0));
    CHECK(p.initial_position_grad(v2(1.2, 0.3)).isZero(0.0));
    const Vec g = p.initial_position_grad(v2(0.3, 0.4));  // r = 0.5
    CHECK(g(0) == doctest::Approx(2.0 * M_PI * 0.6 * std::cos(M_PI)));
    CHECK(g(1) == doctest::Approx(2.0 * M_PI * 0.8 * std::cos(M_PI)));
    CHECK(p.boundary(v2(-2.0, 0.3), 0.5) == 0.0);
    CHECK(p.initial_velocity(v2(0.1, 0.1)) == 0.0);
  }

  TEST_CASE("manufactured problem closed form") {
    const WaveProblem p = problem_manufactured_1d();
    REQUIRE(p.exact.has_value());
    const auto& u = *p.exact;
    CHECK(u.value(v1(0.5), 0.0) == 1.0);
    for (double x : {0.0, 0.2, 0.77, 1.0}) CHECK(std::abs(u.value(v1(x), 0.5)) <= 1e-16);
    CHECK(p.boundary_grad_full);
  }

  TEST_CASE("manufactured solution satisfies its data at random points") {
    const WaveProblem p = problem_manufactured_1d();
    const auto& u = *p.exact;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x = v1(U(rng));
      const double t = U(rng);
      const Vec h = u.second(x, t);
      worst = std::max(worst, std::abs(h(1) - h(0) - p.source(x, t)));
      worst = std::max(worst, std::abs(u.value(x, 0.0) - p.initial_position(x)));
      worst = std::max(worst, std::abs(u.gradient(x, 0.0)(0) - p.initial_position_grad(x)(0)));
      worst = std::max(worst, std::abs(u.gradient(x, 0.0)(1) - p.initial_velocity(x)));
      for (double b : {0.0, 1.0}) {
        worst = std::max(worst, std::abs(u.value(v1(b), t) - p.boundary(v1(b), t)));
        worst = std::max(worst, std::abs(u.gradient(v1(b), t)(1) - p.boundary_dt(v1(b), t)));
        worst = std::max(worst, std::abs(u.gradient(v1(b), t)(0) - p.boundary_grad(v1(b), t)(0)));
      }
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("corner compatibility g(x, 0) = phi(x)") {
    for (const auto& name : problem_names()) {
      const WaveProblem p = problem_by_name(name);
      const int d = p.dim();
      for (int axis = 0; axis < d; ++axis)
        for (int side = 0; side < 2; ++side) {
          Vec x = (p.domain.lo + p.domain.hi) / 2.0;
          x(axis) = side ? p.domain.hi(axis) : p.domain.lo(axis);
          CHECK(std::abs(p.boundary(x, 0.0) - p.initial_position(x)) <= 1e-12);
        }
    }
  }

  TEST_CASE("box measures") {
    const Box unit = Box::cube(1, 0.0, 1.0, 1.0);
    CHECK(unit.volume() == 1.0);
    CHECK(unit.boundary_measure() == 2.0);
    const Box sq = Box::cube(2, -2.0, 2.0, 1.0);
    CHECK(sq.volume() == 16.0);
    CHECK(sq.boundary_measure() == 16.0);
    CHECK(sq.face_measure(0) == 4.0);
    const Box line = Box::cube(1, -2.0, 2.0, 8.0);
    CHECK(line.volume() == 4.0);
    CHECK(line.boundary_measure() == 2.0);
    CHECK(line.spacetime_diagonal() == doctest::Approx(std::sqrt(80.0)));
  }

  TEST_CASE("invalid boxes and names are rejected") {
    CHECK_THROWS_AS(Box::cube(1, 1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Box::cube(1, 0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(problem_by_name("wave3d"), std::invalid_argument);
    CHECK(problem_names().size() == 3);
  }
}
