#include "spinnwave/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spinnwave {

using std::numbers::pi;

WaveProblem problem_1d_paper() {
  WaveProblem p;
  p.name = "wave1d_paper";
  p.domain = Box::cube(1, -2.0, 2.0, 8.0);
  const double omega = 0.8 * pi;
  p.source = [](const Vec&, double) { return 0.0; };
  p.initial_position = [](const Vec&) { return 0.0; };
  p.initial_position_grad = [](const Vec&) { return Vec::Zero(1); };
  p.initial_velocity = [](const Vec&) { return 0.0; };
  p.boundary = [omega](const Vec& x, double t) { return x(0) < 0.0 ? std::sin(omega * t) : 0.0; };
  p.boundary_dt = [omega](const Vec& x, double t) {
    return x(0) < 0.0 ? omega * std::cos(omega * t) : 0.0;
  };
  // No tangential directions in 1D; the normal derivative is not part of the data.
  p.boundary_grad = [](const Vec&, double) { return Vec::Zero(1); };
  p.boundary_grad_full = false;
  return p;
}

WaveProblem problem_2d_paper() {
  WaveProblem p;
  p.name = "wave2d_paper";
  p.domain = Box::cube(2, -2.0, 2.0, 1.0);
  p.source = [](const Vec&, double) { return 0.0; };
  p.initial_position = [](const Vec& x) {
    const double r = x.norm();
    return r < 1.0 ? std::sin(2.0 * pi * r) : 0.0;
  };
  // One-sided at r = 1 (the data is only C^0 there), zero at the origin.
  p.initial_position_grad = [](const Vec& x) {
    const double r = x.norm();
    if (r <= 0.0 || r >= 1.0) return Vec(Vec::Zero(2));
    return Vec(2.0 * pi * std::cos(2.0 * pi * r) / r * x);
  };
  p.initial_velocity = [](const Vec&) { return 0.0; };
  p.boundary = [](const Vec&, double) { return 0.0; };
  p.boundary_dt = [](const Vec&, double) { return 0.0; };
  p.boundary_grad = [](const Vec&, double) { return Vec::Zero(2); };
  p.boundary_grad_full = false;
  return p;
}

WaveProblem problem_manufactured_1d() {
  WaveProblem p;
  p.name = "manufactured1d";
  p.domain = Box::cube(1, 0.0, 1.0, 1.0);
  p.source = [](const Vec&, double) { return 0.0; };
  p.initial_position = [](const Vec& x) { return std::sin(pi * x(0)); };
  p.initial_position_grad = [](const Vec& x) { return Vec::Constant(1, pi * std::cos(pi * x(0))); };
  p.initial_velocity = [](const Vec&) { return 0.0; };
  p.boundary = [](const Vec&, double) { return 0.0; };
  p.boundary_dt = [](const Vec&, double) { return 0.0; };
  p.boundary_grad = [](const Vec& x, double t) {
    return Vec::Constant(1, pi * std::cos(pi * x(0)) * std::cos(pi * t));
  };
  p.boundary_grad_full = true;

  ExactSolution exact;
  exact.value = [](const Vec& x, double t) { return std::sin(pi * x(0)) * std::cos(pi * t); };
  exact.gradient = [](const Vec& x, double t) {
    Vec g(2);
    g << pi * std::cos(pi * x(0)) * std::cos(pi * t), -pi * std::sin(pi * x(0)) * std::sin(pi * t);
    return g;
  };
  exact.second = [](const Vec& x, double t) {
    const double u = std::sin(pi * x(0)) * std::cos(pi * t);
    Vec s(2);
    s << -pi * pi * u, -pi * pi * u;
    return s;
  };
  p.exact = std::move(exact);
  return p;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {"wave1d_paper", "wave2d_paper", "manufactured1d"};
  return names;
}

WaveProblem problem_by_name(const std::string& name) {
  if (name == "wave1d_paper") return problem_1d_paper();
  if (name == "wave2d_paper") return problem_2d_paper();
  if (name == "manufactured1d") return problem_manufactured_1d();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace spinnwave
