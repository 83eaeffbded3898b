#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace spinnwave {

/// Tensor grid in space and time with one value per node.
///
/// `values` has one row per spatial node (x_1 fastest, then x_2) and one
/// column per time level.
struct SpaceTimeGrid {
  std::vector<Eigen::VectorXd> axes;  // spatial axes
  Eigen::VectorXd times;
  Eigen::MatrixXd values;

  int dim() const { return static_cast<int>(axes.size()); }

  Eigen::Index n_spatial() const {
    Eigen::Index n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
  }

  /// Coordinates of spatial node `idx`.
  Eigen::VectorXd node(Eigen::Index idx) const {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) {
      x(i) = axes[i](idx % axes[i].size());
      idx /= axes[i].size();
    }
    return x;
  }

  /// All space-time nodes as columns (x_1..x_d, t), time-level major.
  Eigen::MatrixXd spacetime_points() const {
    const Eigen::Index ns = n_spatial();
    Eigen::MatrixXd pts(dim() + 1, ns * times.size());
    for (Eigen::Index n = 0; n < times.size(); ++n)
      for (Eigen::Index s = 0; s < ns; ++s) {
        pts.col(n * ns + s).head(dim()) = node(s);
        pts(dim(), n * ns + s) = times(n);
      }
    return pts;
  }

  /// Keeps every `space_stride`-th node per axis and every `time_stride`-th
  /// level; the last node and level are always kept.
  SpaceTimeGrid subsample(int space_stride, int time_stride) const {
    if (space_stride < 1 || time_stride < 1) throw std::invalid_argument("subsample: stride < 1");
    auto pick = [](Eigen::Index n, int stride) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < n; i += stride) idx.push_back(i);
      if (idx.back() != n - 1) idx.push_back(n - 1);
      return idx;
    };
    SpaceTimeGrid out;
    std::vector<std::vector<Eigen::Index>> keep;
    for (const auto& a : axes) {
      keep.push_back(pick(a.size(), space_stride));
      Eigen::VectorXd ax(keep.back().size());
      for (std::size_t i = 0; i < keep.back().size(); ++i) ax(i) = a(keep.back()[i]);
      out.axes.push_back(ax);
    }
    const auto tk = pick(times.size(), time_stride);
    out.times.resize(tk.size());
    for (std::size_t i = 0; i < tk.size(); ++i) out.times(i) = times(tk[i]);
    out.values.resize(out.n_spatial(), tk.size());
    for (Eigen::Index s = 0; s < out.n_spatial(); ++s) {
      Eigen::Index rem = s, src = 0, stride = 1;
      for (int i = 0; i < dim(); ++i) {
        const Eigen::Index n_new = out.axes[i].size();
        src += keep[i][rem % n_new] * stride;
        rem /= n_new;
        stride *= axes[i].size();
      }
      for (std::size_t n = 0; n < tk.size(); ++n) out.values(s, n) = values(src, tk[n]);
    }
    return out;
  }
};

/// Composite trapezoid weights for an increasing, possibly non-uniform axis.
inline Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& axis) {
  const Eigen::Index n = axis.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double h = axis(i + 1) - axis(i);
    w(i) += 0.5 * h;
    w(i + 1) += 0.5 * h;
  }
  return w;
}

/// Trapezoid weights of the spatial nodes (x_1 fastest).
inline Eigen::VectorXd spatial_weights(const std::vector<Eigen::VectorXd>& axes) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (const auto& a : axes) {
    const Eigen::VectorXd wa = trapezoid_weights(a);
    Eigen::VectorXd next(w.size() * wa.size());
    for (Eigen::Index j = 0; j < wa.size(); ++j)
      next.segment(j * w.size(), w.size()) = w * wa(j);
    w.swap(next);
  }
  return w;
}

/// Space-time trapezoid weights shaped like SpaceTimeGrid::values.
inline Eigen::MatrixXd spacetime_weights(const SpaceTimeGrid& g) {
  return spatial_weights(g.axes) * trapezoid_weights(g.times).transpose();
}

}  // namespace spinnwave
