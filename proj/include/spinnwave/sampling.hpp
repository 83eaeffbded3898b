#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinnwave/domain.hpp"

namespace spinnwave {

/// Collocation points, stored as columns (x_1..x_d, t).
///
/// The uniform draw pairs every spatial sample X_n with every time T_k, so
/// `interior` starts with N*K columns and `boundary` with M*K. Adaptive
/// resampling appends further columns; nothing is ever removed.
struct SampleSet {
  Box domain;
  Eigen::MatrixXd interior;
  Eigen::MatrixXd initial;   // t row is 0
  Eigen::MatrixXd boundary;
  std::vector<int> boundary_face;  // 2 * axis + (0: lo side, 1: hi side)
  std::size_t N = 0, M = 0, K = 0;

  Eigen::Index n_interior() const { return interior.cols(); }
  Eigen::Index n_initial() const { return initial.cols(); }
  Eigen::Index n_boundary() const { return boundary.cols(); }
};

struct UniformSampling {
  std::size_t N = 100;  // spatial interior samples
  std::size_t M = 20;   // boundary samples
  std::size_t K = 10;   // time samples
  std::size_t n_initial = 0;  // independent initial-slice samples; 0 means N
  bool shared_initial = false;  // reuse X_n at t = 0 instead of an independent draw
};

SampleSet sample_uniform(const Box& domain, const UniformSampling& counts, std::uint64_t rng_seed);

/// Convenience overload: independent initial set of N points.
inline SampleSet sample_uniform(const Box& domain, std::size_t N, std::size_t M, std::size_t K,
                                std::uint64_t rng_seed) {
  return sample_uniform(domain, UniformSampling{N, M, K, 0, false}, rng_seed);
}

/// Splits `total` points over the 2d faces proportionally to face measure
/// (largest remainder; exactly equal for the two endpoints in 1D).
std::vector<std::size_t> allocate_boundary(const Box& domain, std::size_t total);

struct GasConfig {
  int period = 250;  // epochs between resampling rounds
  std::size_t add_interior = 600;
  std::size_t add_boundary = 30;
  std::size_t add_initial = 15;
  int n_components = 10;
  double bandwidth = 0.05;  // std relative to the space-time box diagonal
  int rounds = 10;

  void validate() const;
};

/// Gaussian-mixture augmentation: picks the q = 10 * n_components interior
/// points with the largest squared residual, places component means at
/// residual-weighted k-means centres of those points, and draws the new
/// points from the mixture with isotropic std `bandwidth * diagonal`.
/// Draws outside the domain are rejected; boundary draws are projected onto
/// the nearest face and initial draws onto t = 0.
SampleSet gas_resample(const Eigen::VectorXd& residuals, const SampleSet& current,
                       const GasConfig& cfg, std::uint64_t rng_seed);

/// Residual-weighted k-means on the columns of `points`. Centres are seeded
/// k-means++ style and refined by Lloyd iterations. Returns centres as
/// columns and writes each centre's total weight to `mass`.
Eigen::MatrixXd weighted_kmeans(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                int k, std::uint64_t rng_seed, Eigen::VectorXd& mass);

/// CSV with header `kind,x_1,...,x_d,t`; kind is interior|initial|boundary.
void write_samples_csv(const std::filesystem::path& path, const SampleSet& s);
SampleSet read_samples_csv(const std::filesystem::path& path, const Box& domain);

}  // namespace spinnwave
