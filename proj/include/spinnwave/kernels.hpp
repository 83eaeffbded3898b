#pragma once

#include <Eigen/Dense>

namespace spinnwave::detail {

/// out = weights * in, with every output entry accumulated over the inner
/// index in ascending order. Column results do not depend on how many
/// columns are processed together, which Eigen's blocked GEMM does not
/// guarantee.
template <typename Scalar>
void ordered_product(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& weights,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& in,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& out) {
  const Eigen::Index m = weights.rows();
  const Eigen::Index k_max = weights.cols();
  const Eigen::Index n = in.cols();
  out.setZero(m, n);
  const Scalar* w_data = weights.data();
  const Scalar* in_data = in.data();
  Scalar* out_data = out.data();

  Eigen::Index c = 0;
  for (; c + 4 <= n; c += 4) {
    Scalar* o0 = out_data + c * m;
    Scalar* o1 = o0 + m;
    Scalar* o2 = o1 + m;
    Scalar* o3 = o2 + m;
    const Scalar* x0 = in_data + c * k_max;
    const Scalar* x1 = x0 + k_max;
    const Scalar* x2 = x1 + k_max;
    const Scalar* x3 = x2 + k_max;
    for (Eigen::Index k = 0; k < k_max; ++k) {
      const Scalar* w = w_data + k * m;
      const Scalar a0 = x0[k], a1 = x1[k], a2 = x2[k], a3 = x3[k];
      for (Eigen::Index i = 0; i < m; ++i) {
        const Scalar wi = w[i];
        o0[i] += a0 * wi;
        o1[i] += a1 * wi;
        o2[i] += a2 * wi;
        o3[i] += a3 * wi;
      }
    }
  }
  for (; c < n; ++c) {
    Scalar* o = out_data + c * m;
    const Scalar* x = in_data + c * k_max;
    for (Eigen::Index k = 0; k < k_max; ++k) {
      const Scalar* w = w_data + k * m;
      const Scalar a = x[k];
      for (Eigen::Index i = 0; i < m; ++i) o[i] += a * w[i];
    }
  }
}

}  // namespace spinnwave::detail
