#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace spinnwave {

/// Axis-aligned spatial box [lo, hi] times the time interval [0, T].
///
/// Points handed to networks are columns (x_1, ..., x_d, t): spatial
/// coordinates first, time last.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double T = 1.0;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_, double horizon)
      : lo(std::move(lo_)), hi(std::move(hi_)), T(horizon) {
    validate();
  }

  static Box cube(int d, double a, double b, double horizon) {
    return Box(Eigen::VectorXd::Constant(d, a), Eigen::VectorXd::Constant(d, b), horizon);
  }

  void validate() const {
    if (lo.size() == 0 || lo.size() != hi.size())
      throw std::invalid_argument("Box: lo/hi dimension mismatch");
    if (!((hi - lo).array() > 0.0).all()) throw std::invalid_argument("Box: requires lo < hi");
    if (!(T > 0.0)) throw std::invalid_argument("Box: time horizon must be positive");
  }

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd extent() const { return hi - lo; }

  /// |Omega|
  double volume() const { return extent().prod(); }

  /// Measure of the face orthogonal to `axis` (1 for the endpoints in 1D).
  double face_measure(int axis) const {
    double m = 1.0;
    for (int j = 0; j < dim(); ++j)
      if (j != axis) m *= hi(j) - lo(j);
    return m;
  }

  /// |dOmega|: point count 2 in 1D, total face area otherwise.
  double boundary_measure() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) m += 2.0 * face_measure(i);
    return m;
  }

  /// Diagonal of the space-time box Omega x [0, T].
  double spacetime_diagonal() const { return std::sqrt(extent().squaredNorm() + T * T); }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
  }
};

}  // namespace spinnwave
