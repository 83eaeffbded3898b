#pragma once

// Extended-precision re-evaluation of the empirical loss, written from the
// term definitions, for finite-difference gradient checks.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinnwave/loss.hpp"
#include "spinnwave/network.hpp"

namespace spinnwave::testing {

using LD = long double;
using MlpLD = MlpParams<LD>;

inline MlpLD to_long_double(const Mlp& p) {
  MlpLD q;
  for (const auto& w : p.weights) q.weights.push_back(w.cast<LD>());
  for (const auto& b : p.biases) q.biases.push_back(b.cast<LD>());
  return q;
}

inline JetFields<LD> jets_ld(const MlpLD& p, const Eigen::MatrixXd& pts) {
  return forward_jets<LD>(p, pts.cast<LD>(), false).fields;
}

inline Vec spatial(const Eigen::MatrixXd& pts, Eigen::Index c) { return pts.col(c).head(pts.rows() - 1); }

/// Total empirical loss in long double.
inline LD loss_ld(const MlpLD& p, const WaveProblem& prob, const LossGroups& g, const LossOptions& opt) {
  const bool h1 = opt.mode == LossMode::Spinn;
  const Eigen::Index d = prob.dim();
  LD total = 0.0L;

  const auto in = jets_ld(p, g.interior.points);
  LD acc = 0.0L;
  for (Eigen::Index c = 0; c < in.batch(); ++c) {
    const Eigen::MatrixXd& P = g.interior.points;
    LD r = in.u_tt(c) - LD(prob.source(spatial(P, c), P(d, c)));
    for (Eigen::Index i = 0; i < d; ++i) r -= in.u_xx(i, c);
    acc += r * r;
  }
  total += LD(g.interior.scale) * acc;

  const auto ini = jets_ld(p, g.initial.points);
  acc = 0.0L;
  for (Eigen::Index c = 0; c < ini.batch(); ++c) {
    const Vec x = spatial(g.initial.points, c);
    const LD e = ini.u(c) - LD(prob.initial_position(x));
    const LD v = ini.u_t(c) - LD(prob.initial_velocity(x));
    acc += e * e + v * v;
    if (h1) {
      const Vec gx = prob.initial_position_grad(x);
      for (Eigen::Index i = 0; i < d; ++i) {
        const LD de = ini.u_x(i, c) - LD(gx(i));
        acc += de * de;
      }
    }
  }
  total += LD(g.initial.scale) * acc;

  const auto bd = jets_ld(p, g.boundary.points);
  acc = 0.0L;
  for (Eigen::Index c = 0; c < bd.batch(); ++c) {
    const Eigen::MatrixXd& P = g.boundary.points;
    const Vec x = spatial(P, c);
    const double t = P(d, c);
    const LD e = bd.u(c) - LD(prob.boundary(x, t));
    acc += e * e;
    if (h1) {
      const LD et = bd.u_t(c) - LD(prob.boundary_dt(x, t));
      acc += et * et;
      const Vec gx = prob.boundary_grad(x, t);
      const Eigen::Index normal = g.boundary_face[std::size_t(c)] / 2;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (i == normal && opt.boundary_h1 == BoundaryH1::Tangential) continue;
        const LD de = bd.u_x(i, c) - LD(gx(i));
        acc += de * de;
      }
    }
  }
  total += LD(g.boundary.scale) * acc;
  return total;
}

/// Entry `index` in flatten() order: per layer, A column-major, then b.
inline LD& parameter_entry(MlpLD& m, Eigen::Index index) {
  Eigen::Index k = index;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    auto& W = m.weights[l];
    if (k < W.size()) return W(k % W.rows(), k / W.rows());
    k -= W.size();
    auto& b = m.biases[l];
    if (k < b.size()) return b(k);
    k -= b.size();
  }
  throw std::out_of_range("parameter_entry: index");
}

/// Central difference of loss_ld in parameter `index`.
inline LD loss_fd_ld(const Mlp& p, const WaveProblem& prob, const LossGroups& g, const LossOptions& opt,
                     Eigen::Index index, LD h) {
  MlpLD q = to_long_double(p);
  auto entry = [&](MlpLD& m) -> LD& { return parameter_entry(m, index); };
  const LD base = entry(q);
  entry(q) = base + h;
  const LD fp = loss_ld(q, prob, g, opt);
  entry(q) = base - h;
  const LD fm = loss_ld(q, prob, g, opt);
  return (fp - fm) / (2.0L * h);
}

/// Central differences over steps 1e-4 .. 1e-8 (relative to |theta|);
/// returns the estimate from the adjacent pair that agrees best.
inline double loss_fd_ladder(const Mlp& p, const WaveProblem& prob, const LossGroups& g, const LossOptions& opt,
                             Eigen::Index index, double theta) {
  LD prev = 0.0L, best = std::numeric_limits<LD>::infinity(), pick = 0.0L;
  bool first = true;
  for (LD h : {1e-4L, 1e-5L, 1e-6L, 1e-7L, 1e-8L}) {
    const LD v = loss_fd_ld(p, prob, g, opt, index, h * (1.0L + std::abs(LD(theta))));
    if (!first && std::abs(v - prev) < best) {
      best = std::abs(v - prev);
      pick = v;
    }
    prev = v;
    first = false;
  }
  return double(pick);
}

}  // namespace spinnwave::testing
