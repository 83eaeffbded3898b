#include "spinnwave/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "spinnwave/parallel.hpp"

namespace spinnwave {
namespace {

constexpr Eigen::Index kChunk = 2048;

}  // namespace

Eigen::MatrixXd evaluate_on_grid(const Mlp& params, const SpaceTimeGrid& grid) {
  const Eigen::MatrixXd pts = grid.spacetime_points();
  Eigen::RowVectorXd u(pts.cols());
  const std::size_t n_chunks = (pts.cols() + kChunk - 1) / kChunk;
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index start = Eigen::Index(c) * kChunk;
    const Eigen::Index n = std::min<Eigen::Index>(kChunk, pts.cols() - start);
    u.segment(start, n) = forward(params, Eigen::MatrixXd(pts.middleCols(start, n)));
  });
  return Eigen::Map<const Eigen::MatrixXd>(u.data(), grid.n_spatial(), grid.times.size());
}

SpaceTimeGrid reference_from_exact(const WaveProblem& prob, Eigen::Index n_space, Eigen::Index n_time) {
  if (!prob.exact) throw std::invalid_argument(prob.name + ": no closed-form solution");
  if (n_space < 2 || n_time < 2) throw std::invalid_argument("reference_from_exact: need >= 2 nodes");
  const Box& box = prob.domain;
  SpaceTimeGrid g;
  for (int i = 0; i < box.dim(); ++i)
    g.axes.push_back(Eigen::VectorXd::LinSpaced(n_space, box.lo(i), box.hi(i)));
  g.times = Eigen::VectorXd::LinSpaced(n_time, 0.0, box.T);
  g.values.resize(g.n_spatial(), n_time);
  for (Eigen::Index s = 0; s < g.n_spatial(); ++s) {
    const Vec x = g.node(s);
    for (Eigen::Index n = 0; n < n_time; ++n) g.values(s, n) = prob.exact->value(x, g.times(n));
  }
  return g;
}

double relative_l2(const Mlp& params, const SpaceTimeGrid& reference) {
  const Eigen::MatrixXd w = spacetime_weights(reference);
  const double ref2 = (w.array() * reference.values.array().square()).sum();
  if (!(ref2 > 0.0)) throw std::invalid_argument("relative_l2: reference has zero norm");
  const Eigen::MatrixXd u = evaluate_on_grid(params, reference);
  const double err2 = (w.array() * (u - reference.values).array().square()).sum();
  return std::sqrt(err2 / ref2);
}

SpaceTimeGrid pointwise_abs_error(const Mlp& params, const SpaceTimeGrid& reference) {
  SpaceTimeGrid out = reference;
  out.values = (evaluate_on_grid(params, reference) - reference.values).cwiseAbs();
  return out;
}

double h1_error(const Mlp& params, const WaveProblem& prob, const SpaceTimeGrid& grid) {
  if (!prob.exact) throw std::invalid_argument(prob.name + ": no closed-form solution");
  const int d = grid.dim();
  const Eigen::MatrixXd pts = grid.spacetime_points();
  const Eigen::MatrixXd w = spacetime_weights(grid);
  const Eigen::Map<const Eigen::VectorXd> wflat(w.data(), w.size());
  const std::size_t n_chunks = (pts.cols() + kChunk - 1) / kChunk;
  Eigen::VectorXd partial = Eigen::VectorXd::Zero(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index start = Eigen::Index(c) * kChunk;
    const Eigen::Index n = std::min<Eigen::Index>(kChunk, pts.cols() - start);
    const auto jf = forward_jets(params, Eigen::MatrixXd(pts.middleCols(start, n)), false).fields;
    double acc = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      const Vec x = pts.col(start + p).head(d);
      const double t = pts(d, start + p);
      const Vec g = prob.exact->gradient(x, t);
      const double v = jf.u(p) - prob.exact->value(x, t);
      double dens = v * v;
      const double vt = jf.u_t(p) - g(d);
      dens += vt * vt;
      for (int i = 0; i < d; ++i) {
        const double vx = jf.u_x(i, p) - g(i);
        dens += vx * vx;
      }
      acc += wflat(start + p) * dens;
    }
    partial(c) = acc;
  });
  double total = 0.0;
  for (Eigen::Index c = 0; c < partial.size(); ++c) total += partial(c);
  return std::sqrt(total);
}

ErrorReport error_report(const Mlp& params, const SpaceTimeGrid& reference,
                         const WaveProblem& prob, bool keep_pointwise) {
  ErrorReport r;
  r.rel_l2 = relative_l2(params, reference);
  SpaceTimeGrid pw = pointwise_abs_error(params, reference);
  r.linf = pw.values.maxCoeff();
  r.h1_error = prob.exact ? h1_error(params, prob, reference) : -1.0;
  if (keep_pointwise) r.pointwise = std::move(pw);
  return r;
}

nlohmann::json to_json(const ErrorReport& r) {
  nlohmann::json j;
  j["rel_l2"] = r.rel_l2;
  if (r.h1_error >= 0.0)
    j["h1_error"] = r.h1_error;
  else
    j["h1_error"] = nullptr;
  j["linf"] = r.linf;
  return j;
}

nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json j;
  j["gamma"] = r.gamma;
  j["c2_bound"] = r.c2_bound;
  j["loss_quad"] = r.loss_quad;
  j["bound"] = r.bound;
  if (r.h1_measured >= 0.0)
    j["h1_measured"] = r.h1_measured;
  else
    j["h1_measured"] = nullptr;
  j["applicable"] = r.applicable;
  j["satisfied"] = r.satisfied;
  j["margin"] = r.margin;
  return j;
}

StabilityReport stability_diagnostic(const Mlp& params, const WaveProblem& prob, double C_T,
                                     int quad_points, const SpaceTimeGrid* h1_grid,
                                     std::size_t n_probe, std::uint64_t probe_seed) {
  const Box& box = prob.domain;
  StabilityReport r;
  r.c2_bound = probe_c2_norm(params, box, n_probe, probe_seed).bound;
  r.gamma = C_T * (1.0 + 3.0 * std::sqrt(double(box.dim())) * r.c2_bound * box.boundary_measure() * box.T);
  r.loss_quad = population_loss(params, prob, quad_points, LossOptions{}).total;
  r.bound = r.gamma * std::sqrt(r.loss_quad);
  r.margin = r.gamma * r.gamma * r.loss_quad;
  r.applicable = r.loss_quad < 1.0;
  if (prob.exact && h1_grid) {
    r.h1_measured = h1_error(params, prob, *h1_grid);
    const double h4 = std::pow(r.h1_measured, 4);
    r.margin -= h4;
    r.satisfied = r.applicable && h4 <= r.gamma * r.gamma * r.loss_quad;
  }
  return r;
}

}  // namespace spinnwave
