#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "spinnwave/grid.hpp"
#include "spinnwave/loss.hpp"
#include "spinnwave/network.hpp"
#include "spinnwave/problem.hpp"

namespace spinnwave {

struct ErrorReport {
  double rel_l2 = 0.0;
  double h1_error = 0.0;  // negative when no exact solution is available
  double linf = 0.0;
  std::optional<SpaceTimeGrid> pointwise;  // |u_ref - u_net| on the evaluation grid
};

nlohmann::json to_json(const ErrorReport& r);

/// Network values at every node of `grid`, shaped like grid.values.
Eigen::MatrixXd evaluate_on_grid(const Mlp& params, const SpaceTimeGrid& grid);

/// Samples the closed form on a uniform tensor grid with `n_space` nodes per
/// spatial axis and `n_time` levels.
SpaceTimeGrid reference_from_exact(const WaveProblem& prob, Eigen::Index n_space, Eigen::Index n_time);

/// ||u_net - u_ref||_2 / ||u_ref||_2 over the space-time grid (trapezoid rule).
/// Throws std::invalid_argument if the reference has zero norm.
double relative_l2(const Mlp& params, const SpaceTimeGrid& reference);

/// |u_ref - u_net| at every node.
SpaceTimeGrid pointwise_abs_error(const Mlp& params, const SpaceTimeGrid& reference);

/// H^1 distance to the exact solution: sqrt of the trapezoid integral of
/// v^2 + v_t^2 + sum_i v_{x_i}^2 with v = u_net - u*, on the nodes of `grid`.
double h1_error(const Mlp& params, const WaveProblem& prob, const SpaceTimeGrid& grid);

ErrorReport error_report(const Mlp& params, const SpaceTimeGrid& reference,
                         const WaveProblem& prob, bool keep_pointwise);

struct StabilityReport {
  double gamma = 0.0;      // C_T (1 + 3 sqrt(d) B |dOmega| T)
  double c2_bound = 0.0;   // B, probed
  double loss_quad = 0.0;  // population SPINN loss
  double bound = 0.0;      // gamma * sqrt(loss_quad)
  double h1_measured = -1.0;
  bool applicable = false;  // loss_quad < 1
  bool satisfied = false;   // h1^4 <= gamma^2 loss_quad
  double margin = 0.0;      // gamma^2 loss_quad - h1^4
};

nlohmann::json to_json(const StabilityReport& r);

/// Evaluates the stability chain for a trained network. B comes from
/// probe_c2_norm with `n_probe` points; the population loss from a midpoint
/// grid with `quad_points` nodes per axis. `h1_grid` must be set when the
/// problem has an exact solution.
StabilityReport stability_diagnostic(const Mlp& params, const WaveProblem& prob, double C_T,
                                     int quad_points, const SpaceTimeGrid* h1_grid,
                                     std::size_t n_probe = 10000, std::uint64_t probe_seed = 0);

}  // namespace spinnwave
