#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "spinnwave/network.hpp"
#include "spinnwave/problem.hpp"

namespace spinnwave {

/// Exponent split of the sample schedules: k1 + k2 = 2 + delta and
/// ktil1 + ktil2 = d + 1, all nonnegative.
struct ExponentSplit {
  double k1 = 0.0;
  double k2 = 0.0;
  double ktil1 = 0.0;
  double ktil2 = 0.0;

  /// Throws std::invalid_argument if either sum is off by more than 1e-12
  /// (relative) or an exponent is negative.
  void validate(int d, double delta) const;

  /// Split with the given k1 and ktil1; the partners fill up the sums.
  static ExponentSplit complete(int d, double delta, double k1, double ktil1);
};

/// Unknown theory constants; all default to 1.
struct PlanConstants {
  double width = 1.0;
  double N = 1.0;
  double K = 1.0;
  double M = 1.0;
};

struct TheoryPlan {
  double epsilon = 0.0;
  int d = 1;
  double delta = 0.0;
  ExponentSplit split;
  PlanConstants constants;
  int depth = 0;
  double width_real = 0.0;
  double N_real = 0.0, K_real = 0.0, M_real = 0.0;
  std::uint64_t width = 0, N = 0, K = 0, M = 0;  // ceilings
};

nlohmann::json to_json(const TheoryPlan& p);

/// ceil(log2 d) + 2.
int plan_depth(int d);

/// Width C_w (1/eps^2)^(d+1) and counts N = C_N (1/eps^4)^(d+3+delta),
/// K = C_K (1/eps^4)^(k1+ktil1), M = C_M (1/eps^4)^(k2+ktil2), each rounded up.
/// Requires eps in (0, 1], delta > 0, d >= 1.
TheoryPlan plan(double epsilon, int d, double delta, const ExponentSplit& split,
                const PlanConstants& constants = {});

struct NetworkSamplePlan {
  double N_real = 0.0, K_real = 0.0, M_real = 0.0;
  std::uint64_t N = 0, K = 0, M = 0;
};

/// Counts for a network of depth D and width W with log = ln:
/// N = C D^4 W^2 (D + ln W) (1/eps)^(2+delta), K = C D^2 f_K (1/eps)^k1,
/// M = C f_M (1/eps)^k2. Requires f_K f_M = D^2 W^2 (D + ln W) to 1e-9
/// relative and k1 + k2 = 2 + delta.
NetworkSamplePlan sample_plan_for_network(double epsilon, double D, double W, double delta, double k1, double k2,
                            double f_K, double f_M, double C = 1.0);

struct DeviationRow {
  std::size_t N = 0;
  std::size_t K = 0;
  std::size_t M = 0;
  double mean_dev = 0.0;
  double std_dev = 0.0;
};

struct DeviationProbeConfig {
  std::vector<std::size_t> sizes;  // ascending spatial sample counts N
  int repeats = 20;
  std::uint64_t seed = 0;
  int quad_points = 256;   // population quadrature nodes per axis
  double k_ratio = 0.01;   // K = ceil(k_ratio N)
  double m_ratio = 0.1;    // M = ceil(m_ratio N)
};

/// Mean and standard deviation over repeats of |population - empirical|
/// SPINN loss for a fixed network, with K and M growing in proportion to N
/// and N independent initial samples. Repeat r of size i draws from its own
/// seed stream.
std::vector<DeviationRow> deviation_probe(const Mlp& params, const WaveProblem& prob,
                                          const DeviationProbeConfig& cfg);

/// Least-squares slope of log(mean_dev) against log(N).
double loglog_slope(const std::vector<DeviationRow>& rows);

void write_deviation_csv(const std::filesystem::path& path, const std::vector<DeviationRow>& rows);

}  // namespace spinnwave
