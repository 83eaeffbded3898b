#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinnwave/domain.hpp"

namespace spinnwave {

using Vec = Eigen::VectorXd;

/// Closed-form solution with the derivatives the diagnostics need.
/// Gradient and second-derivative vectors are ordered (x_1..x_d, t).
struct ExactSolution {
  std::function<double(const Vec& x, double t)> value;
  std::function<Vec(const Vec& x, double t)> gradient;
  std::function<Vec(const Vec& x, double t)> second;
};

/// u_tt - Laplace(u) = f on Omega x [0,T], u = phi and u_t = psi at t = 0,
/// u = g on the spatial boundary.
struct WaveProblem {
  std::string name;
  Box domain;
  std::function<double(const Vec& x, double t)> source;
  std::function<double(const Vec& x)> initial_position;
  std::function<Vec(const Vec& x)> initial_position_grad;
  std::function<double(const Vec& x)> initial_velocity;
  std::function<double(const Vec& x, double t)> boundary;
  std::function<double(const Vec& x, double t)> boundary_dt;
  /// Spatial gradient of g at a boundary point. Components tangent to the
  /// face are always valid; the normal component only when
  /// `boundary_grad_full` is set.
  std::function<Vec(const Vec& x, double t)> boundary_grad;
  bool boundary_grad_full = false;
  std::optional<ExactSolution> exact;

  int dim() const { return domain.dim(); }
};

/// Omega = [-2, 2], T = 8, u(-2, t) = sin(0.8 pi t), zero elsewhere.
WaveProblem problem_1d_paper();

/// Omega = [-2, 2]^2, T = 1, phi = sin(2 pi r) inside the unit disc.
WaveProblem problem_2d_paper();

/// Omega = [0, 1], T = 1, u* = sin(pi x) cos(pi t).
WaveProblem problem_manufactured_1d();

/// "wave1d_paper" | "wave2d_paper" | "manufactured1d"
WaveProblem problem_by_name(const std::string& name);
const std::vector<std::string>& problem_names();

}  // namespace spinnwave
