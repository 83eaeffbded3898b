#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinnwave/network.hpp"
#include "spinnwave/problem.hpp"
#include "spinnwave/sampling.hpp"

namespace spinnwave {

/// SPINN uses H^1 mismatches for the initial position and the boundary data;
/// PINN keeps plain L^2 value mismatches there.
enum class LossMode { Spinn, Pinn };

/// Which spatial derivative mismatches enter the boundary H^1 term.
/// `Tangential` keeps only directions tangent to each face (the time
/// derivative is always included); `AllCoords` sums every spatial direction
/// and needs the full gradient of g.
enum class BoundaryH1 { Tangential, AllCoords };

std::string to_string(LossMode m);
std::string to_string(BoundaryH1 b);
LossMode parse_loss_mode(const std::string& s);
BoundaryH1 parse_boundary_h1(const std::string& s);

struct LossOptions {
  LossMode mode = LossMode::Spinn;
  BoundaryH1 boundary_h1 = BoundaryH1::Tangential;
};

struct LossBreakdown {
  double residual = 0.0;   // |Omega||T| E (u_tt - Lap u - f)^2
  double init_pos = 0.0;   // |Omega| E [(u - phi)^2 + sum_i (u_xi - phi_xi)^2]
  double init_vel = 0.0;   // |Omega| E (u_t - psi)^2
  double boundary = 0.0;   // |dOmega||T| E [(u - g)^2 + (u_t - g_t)^2 + sum_i (u_xi - g_xi)^2]
  double total = 0.0;
  LossMode mode = LossMode::Spinn;
};

/// Points of one loss group with per-point quadrature weights; the term is
/// scale * sum_p weight_p * integrand_p. Empty `weights` means all ones.
struct LossGroup {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
  double scale = 0.0;
};

struct LossGroups {
  LossGroup interior;
  LossGroup initial;
  LossGroup boundary;
  std::vector<int> boundary_face;
};

struct LossRequest {
  bool gradient = false;
  bool residuals = false;  // per-interior-point squared residual
};

struct LossEvaluation {
  LossBreakdown breakdown;
  Mlp gradient;                // set when requested
  Eigen::VectorXd residual_sq;  // set when requested
};

/// Monte Carlo groups: weights |Omega||T|/#interior, |Omega|/#initial,
/// |dOmega||T|/#boundary.
LossGroups empirical_groups(const SampleSet& samples);

/// Midpoint tensor grids with `points_per_axis` nodes per axis (time
/// included), boundary faces weighted by their measure.
LossGroups quadrature_groups(const Box& domain, int points_per_axis);

/// Core evaluation. Work is split into fixed chunks whose partial sums are
/// reduced in chunk order, so results do not depend on the thread count.
LossEvaluation evaluate_loss(const Mlp& params, const WaveProblem& prob, const LossGroups& groups,
                             const LossOptions& options, const LossRequest& request);

LossBreakdown empirical_loss(const Mlp& params, const WaveProblem& prob, const SampleSet& samples,
                             const LossOptions& options);

LossBreakdown population_loss(const Mlp& params, const WaveProblem& prob, int points_per_axis,
                              const LossOptions& options);

/// Exact gradient of empirical_loss(...).total.
Mlp loss_gradient(const Mlp& params, const WaveProblem& prob, const SampleSet& samples,
                  const LossOptions& options);

/// (u_tt - Lap u - f)^2 at every interior sample.
Eigen::VectorXd interior_residuals(const Mlp& params, const WaveProblem& prob,
                                   const SampleSet& samples);

}  // namespace spinnwave
