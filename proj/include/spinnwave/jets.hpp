#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "spinnwave/kernels.hpp"

namespace spinnwave {

/// Second-order univariate jet: value plus first and second derivative with
/// respect to one input coordinate.
template <typename Scalar>
struct Jet2 {
  Scalar val{0};
  Scalar d1{0};
  Scalar d2{0};

  friend bool operator==(const Jet2&, const Jet2&) = default;
};

template <typename Scalar>
constexpr Jet2<Scalar> relu3(const Jet2<Scalar>& j) {
  if (j.val < Scalar(0)) return {};
  const Scalar x = j.val;
  const Scalar x2 = x * x;
  return {x2 * x, Scalar(3) * x2 * j.d1, Scalar(6) * x * j.d1 * j.d1 + Scalar(3) * x2 * j.d2};
}

template <typename Scalar>
constexpr Jet2<Scalar> square(const Jet2<Scalar>& j) {
  return {j.val * j.val, Scalar(2) * j.val * j.d1,
          Scalar(2) * j.d1 * j.d1 + Scalar(2) * j.val * j.d2};
}

/// A layer's worth of jets for a batch of points.
///
/// The three streams are stored side by side in one matrix of shape
/// `width x 3*batch` as `[val | d1 | d2]`, so that an affine map is a single
/// matrix product over all streams.
template <typename Scalar>
class JetBatch {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  JetBatch() = default;
  JetBatch(Eigen::Index width, Eigen::Index batch, Eigen::Index active_coord)
      : streams_(Matrix::Zero(width, 3 * batch)), batch_(batch), active_(active_coord) {}

  Eigen::Index width() const { return streams_.rows(); }
  Eigen::Index batch() const { return batch_; }
  Eigen::Index active_coord() const { return active_; }

  auto val() { return streams_.leftCols(batch_); }
  auto val() const { return streams_.leftCols(batch_); }
  auto d1() { return streams_.middleCols(batch_, batch_); }
  auto d1() const { return streams_.middleCols(batch_, batch_); }
  auto d2() { return streams_.rightCols(batch_); }
  auto d2() const { return streams_.rightCols(batch_); }

  Jet2<Scalar> at(Eigen::Index neuron, Eigen::Index point) const {
    return {streams_(neuron, point), streams_(neuron, batch_ + point),
            streams_(neuron, 2 * batch_ + point)};
  }

  Matrix& streams() { return streams_; }
  const Matrix& streams() const { return streams_; }

 private:
  Matrix streams_;
  Eigen::Index batch_ = 0;
  Eigen::Index active_ = 0;
};

/// Seeds a jet batch from points given as columns of `points` (d+1 rows).
template <typename Derived>
JetBatch<typename Derived::Scalar> seed(const Eigen::MatrixBase<Derived>& points,
                                        Eigen::Index active_coord) {
  using Scalar = typename Derived::Scalar;
  if (active_coord < 0 || active_coord >= points.rows())
    throw std::out_of_range("seed: active coordinate " + std::to_string(active_coord) +
                            " outside 0.." + std::to_string(points.rows() - 1));
  JetBatch<Scalar> jets(points.rows(), points.cols(), active_coord);
  jets.val() = points;
  jets.d1().row(active_coord).setOnes();
  return jets;
}

/// val' = W val + b, d1' = W d1, d2' = W d2.
template <typename Scalar>
JetBatch<Scalar> affine(const JetBatch<Scalar>& in,
                        const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& weights,
                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& bias) {
  if (weights.cols() != in.width() || bias.size() != weights.rows())
    throw std::invalid_argument("affine: weight " + std::to_string(weights.rows()) + "x" +
                                std::to_string(weights.cols()) + " vs input width " +
                                std::to_string(in.width()) + ", bias " +
                                std::to_string(bias.size()));
  JetBatch<Scalar> out(weights.rows(), in.batch(), in.active_coord());
  detail::ordered_product(weights, in.streams(), out.streams());
  out.val().colwise() += bias;
  return out;
}

/// Elementwise ReLU^3 with second-order chain rule.
template <typename Scalar>
JetBatch<Scalar> relu3(const JetBatch<Scalar>& in) {
  JetBatch<Scalar> out(in.width(), in.batch(), in.active_coord());
  const auto x = in.val().array();
  const auto s = in.d1().array();
  const auto q = in.d2().array();
  const auto pos = (x > Scalar(0)).template cast<Scalar>();
  const auto xp = x * pos;
  out.val().array() = xp * xp * xp;
  out.d1().array() = Scalar(3) * xp * xp * s;
  out.d2().array() = Scalar(6) * xp * s * s + Scalar(3) * xp * xp * q;
  return out;
}

}  // namespace spinnwave
