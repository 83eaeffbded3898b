#include <algorithm>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "spinnwave/problem.hpp"
#include "spinnwave/sampling.hpp"

using namespace spinnwave;

namespace {

bool on_face(const Box& b, const Eigen::VectorXd& p, int face) {
  const int axis = face / 2;
  const double want = face % 2 ? b.hi(axis) : b.lo(axis);
  return p(axis) == want;
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("tensor pairing sizes and counts") {
    const Box b = Box::cube(1, -2.0, 2.0, 8.0);
    const SampleSet s = sample_uniform(b, UniformSampling{30, 10, 7, 25, false}, 3);
    CHECK(s.N == 30);
    CHECK(s.M == 10);
    CHECK(s.K == 7);
    CHECK(s.n_interior() == 210);
    CHECK(s.n_boundary() == 70);
    CHECK(s.n_initial() == 25);
    CHECK(s.boundary_face.size() == 70);
    CHECK(s.interior.rows() == 2);
  }

  TEST_CASE("interior pairs every X_n with every T_k") {
    const Box b = Box::cube(1, 0.0, 1.0, 1.0);
    const SampleSet s = sample_uniform(b, 4, 2, 3, 9);
    std::set<double> xs, ts;
    for (Eigen::Index c = 0; c < s.n_interior(); ++c) {
      xs.insert(s.interior(0, c));
      ts.insert(s.interior(1, c));
    }
    CHECK(xs.size() == 4);
    CHECK(ts.size() == 3);
  }

  TEST_CASE("1D benchmark boundary split is 250 per endpoint") {
    const WaveProblem p = problem_1d_paper();
    const auto alloc = allocate_boundary(p.domain, 500);
    REQUIRE(alloc.size() == 2);
    CHECK(alloc[0] == 250);
    CHECK(alloc[1] == 250);
    const SampleSet s = sample_uniform(p.domain, UniformSampling{200, 500, 1, 250, false}, 0);
    const auto lo = std::count(s.boundary_face.begin(), s.boundary_face.end(), 0);
    CHECK(lo == 250);
    CHECK(s.n_initial() == 250);
  }

  TEST_CASE("boundary allocation is proportional to face measure") {
    const auto square = allocate_boundary(Box::cube(2, -2.0, 2.0, 1.0), 101);
    REQUIRE(square.size() == 4);
    std::size_t total = 0;
    for (auto n : square) {
      CHECK(n >= 25);
      CHECK(n <= 26);
      total += n;
    }
    CHECK(total == 101);
    Eigen::VectorXd lo(2), hi(2);
    lo << 0.0, 0.0;
    hi << 3.0, 1.0;  // faces orthogonal to x have measure 1, to y measure 3
    const auto rect = allocate_boundary(Box(lo, hi, 1.0), 80);
    CHECK(rect[0] == 10);
    CHECK(rect[1] == 10);
    CHECK(rect[2] == 30);
    CHECK(rect[3] == 30);
  }

  TEST_CASE("points lie where they belong") {
    const Box b = Box::cube(2, 0.0, 1.0, 1.0);
    const SampleSet s = sample_uniform(b, 200, 40, 5, 1);
    for (Eigen::Index c = 0; c < s.n_interior(); ++c) {
      CHECK(((s.interior.col(c).head(2).array() > 0.0) && (s.interior.col(c).head(2).array() < 1.0)).all());
      CHECK(s.interior(2, c) >= 0.0);
      CHECK(s.interior(2, c) <= 1.0);
    }
    for (Eigen::Index c = 0; c < s.n_boundary(); ++c) {
      CHECK(on_face(b, s.boundary.col(c), s.boundary_face[c]));
      CHECK(b.contains(s.boundary.col(c).head(2)));
    }
    CHECK(s.initial.row(2).isZero(0.0));
  }

  TEST_CASE("shared initial set reuses X_n") {
    const Box b = Box::cube(1, 0.0, 1.0, 1.0);
    const SampleSet s = sample_uniform(b, UniformSampling{6, 2, 3, 0, true}, 5);
    REQUIRE(s.n_initial() == 6);
    std::set<double> xs;
    for (Eigen::Index c = 0; c < s.n_interior(); ++c) xs.insert(s.interior(0, c));
    for (Eigen::Index c = 0; c < 6; ++c) CHECK(xs.count(s.initial(0, c)) == 1);
  }

  TEST_CASE("sampling is deterministic in the seed") {
    const Box b = Box::cube(1, -2.0, 2.0, 8.0);
    const SampleSet a = sample_uniform(b, 50, 10, 4, 77), c = sample_uniform(b, 50, 10, 4, 77),
                    d = sample_uniform(b, 50, 10, 4, 78);
    CHECK(a.interior == c.interior);
    CHECK(a.boundary == c.boundary);
    CHECK(a.initial == c.initial);
    CHECK(a.interior != d.interior);
  }

  TEST_CASE("uniform mean on [-2, 2] is within the CLT bound") {
    const Box b = Box::cube(1, -2.0, 2.0, 1.0);
    const std::size_t N = 20000;
    const SampleSet s = sample_uniform(b, N, 2, 1, 4);
    const double mean = s.interior.row(0).mean();
    CHECK(std::abs(mean) <= 3.0 * 4.0 / std::sqrt(12.0 * N));
  }

  TEST_CASE("zero counts are rejected") {
    const Box b = Box::cube(1, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(sample_uniform(b, 0, 1, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_uniform(b, 1, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_uniform(b, 1, 1, 0, 0), std::invalid_argument);
  }

  TEST_CASE("GAS grows every group by exactly add_* and keeps old points") {
    const Box b = Box::cube(1, -2.0, 2.0, 8.0);
    const SampleSet s = sample_uniform(b, 40, 10, 5, 2);
    GasConfig cfg;
    cfg.add_interior = 60;
    cfg.add_boundary = 7;
    cfg.add_initial = 5;
    cfg.n_components = 3;
    const SampleSet g = gas_resample(Eigen::VectorXd::Zero(s.n_interior()), s, cfg, 11);
    CHECK(g.n_interior() == s.n_interior() + 60);
    CHECK(g.n_boundary() == s.n_boundary() + 7);
    CHECK(g.n_initial() == s.n_initial() + 5);
    CHECK(g.interior.leftCols(s.n_interior()) == s.interior);
    CHECK(g.boundary.leftCols(s.n_boundary()) == s.boundary);
    CHECK(g.initial.leftCols(s.n_initial()) == s.initial);
    for (Eigen::Index c = s.n_interior(); c < g.n_interior(); ++c) {
      CHECK(b.contains(g.interior.col(c).head(1)));
      CHECK(g.interior(1, c) >= 0.0);
      CHECK(g.interior(1, c) <= 8.0);
    }
    for (Eigen::Index c = s.n_boundary(); c < g.n_boundary(); ++c)
      CHECK(on_face(b, g.boundary.col(c), g.boundary_face[c]));
    CHECK(g.initial.rightCols(5).row(1).isZero(0.0));
  }

  TEST_CASE("GAS concentrates added points near a residual spike") {
    const Box b = Box::cube(1, -2.0, 2.0, 8.0);
    const SampleSet s = sample_uniform(b, 100, 10, 10, 6);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(s.n_interior());
    const Eigen::Index spike = 437;
    r(spike) = 1.0;
    GasConfig cfg;
    cfg.n_components = 1;
    cfg.add_interior = 500;
    const SampleSet g = gas_resample(r, s, cfg, 12);
    const Eigen::VectorXd x0 = s.interior.col(spike);
    const double radius = 3.0 * cfg.bandwidth * b.spacetime_diagonal();
    int near = 0;
    for (Eigen::Index c = s.n_interior(); c < g.n_interior(); ++c)
      if ((g.interior.col(c) - x0).norm() <= radius) ++near;
    CHECK(near >= 400);
  }

  TEST_CASE("ten GAS rounds grow 10000 interior points to 16000") {
    const Box b = Box::cube(1, -2.0, 2.0, 8.0);
    SampleSet s = sample_uniform(b, UniformSampling{200, 10, 50, 250, false}, 0);
    REQUIRE(s.n_interior() == 10000);
    REQUIRE(s.n_boundary() == 500);
    GasConfig cfg;
    for (int round = 0; round < cfg.rounds; ++round)
      s = gas_resample(Eigen::VectorXd::LinSpaced(s.n_interior(), 0.0, 1.0), s, cfg, round);
    CHECK(s.n_interior() == 16000);
    CHECK(s.n_boundary() == 800);
    CHECK(s.n_initial() == 400);
  }

  TEST_CASE("GAS rejects bad input") {
    const Box b = Box::cube(1, 0.0, 1.0, 1.0);
    const SampleSet s = sample_uniform(b, 5, 2, 2, 0);
    CHECK_THROWS_AS(gas_resample(Eigen::VectorXd(), s, GasConfig{}, 0), std::invalid_argument);
    CHECK_THROWS_AS(gas_resample(Eigen::VectorXd::Zero(3), s, GasConfig{}, 0), std::invalid_argument);
    GasConfig bad;
    bad.bandwidth = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("samples CSV round trip") {
    const Box b = Box::cube(2, -2.0, 2.0, 1.0);
    const SampleSet s = sample_uniform(b, 10, 8, 3, 1);
    const auto path = std::filesystem::temp_directory_path() / "spinnwave_samples_test.csv";
    write_samples_csv(path, s);
    const SampleSet r = read_samples_csv(path, b);
    CHECK(r.interior == s.interior);
    CHECK(r.boundary == s.boundary);
    CHECK(r.initial == s.initial);
    CHECK(r.boundary_face == s.boundary_face);
    std::filesystem::remove(path);
  }
}
