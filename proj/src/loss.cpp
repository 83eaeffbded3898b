#include "spinnwave/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinnwave/parallel.hpp"

namespace spinnwave {
namespace {

constexpr Eigen::Index kChunk = 256;
constexpr std::size_t kSlabs = 16;

enum class Group { Interior, Initial, Boundary };

struct Chunk {
  Group group;
  Eigen::Index start;
  Eigen::Index count;
};

struct Partial {
  double residual = 0.0, init_pos = 0.0, init_vel = 0.0, boundary = 0.0;
  Mlp gradient;
  bool has_gradient = false;
};

double point_weight(const LossGroup& g, Eigen::Index p) {
  return g.weights.size() == 0 ? 1.0 : g.weights(p);
}

void add_into(Mlp& acc, const Mlp& g) {
  for (std::size_t l = 0; l < acc.weights.size(); ++l) {
    acc.weights[l] += g.weights[l];
    acc.biases[l] += g.biases[l];
  }
}

/// Evaluates one chunk: accumulates the weighted integrand sum for its group
/// into `part`, optionally the parameter gradient and squared residuals.
void run_chunk(const Mlp& params, const WaveProblem& prob, const LossGroups& groups,
               const LossOptions& opt, const LossRequest& req, const Chunk& chunk, Partial& part,
               Eigen::VectorXd* residual_sq) {
  const int d = prob.dim();
  const bool spinn = opt.mode == LossMode::Spinn;
  const LossGroup& grp = chunk.group == Group::Interior  ? groups.interior
                         : chunk.group == Group::Initial ? groups.initial
                                                         : groups.boundary;
  const Eigen::MatrixXd pts = grp.points.middleCols(chunk.start, chunk.count);
  auto jf = forward_jets(params, pts, req.gradient);
  const auto& f = jf.fields;
  JetFields<double> adj;
  if (req.gradient) adj = JetFields<double>::zeros(d, chunk.count);

  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index p = 0; p < chunk.count; ++p) {
    const Eigen::Index gp = chunk.start + p;
    const double w = point_weight(grp, gp);
    const Vec x = pts.col(p).head(d);
    const double t = pts(d, p);
    switch (chunk.group) {
      case Group::Interior: {
        const double r = f.u_tt(p) - f.u_xx.col(p).sum() - prob.source(x, t);
        sum_a += w * (r * r);
        if (residual_sq) (*residual_sq)(gp) = r * r;
        if (req.gradient) {
          const double a = 2.0 * grp.scale * w * r;
          adj.u_tt(p) = a;
          adj.u_xx.col(p).setConstant(-a);
        }
        break;
      }
      case Group::Initial: {
        const double e0 = f.u(p) - prob.initial_position(x);
        double pos = e0 * e0;
        Vec ex;
        if (spinn) {
          ex = f.u_x.col(p) - prob.initial_position_grad(x);
          pos += ex.squaredNorm();
        }
        const double ev = f.u_t(p) - prob.initial_velocity(x);
        sum_a += w * pos;
        sum_b += w * (ev * ev);
        if (req.gradient) {
          const double c = 2.0 * grp.scale * w;
          adj.u(p) = c * e0;
          adj.u_t(p) = c * ev;
          if (spinn) adj.u_x.col(p) = c * ex;
        }
        break;
      }
      case Group::Boundary: {
        const double e0 = f.u(p) - prob.boundary(x, t);
        double val = e0 * e0;
        double et = 0.0;
        Vec ex;
        if (spinn) {
          et = f.u_t(p) - prob.boundary_dt(x, t);
          val += et * et;
          const int axis = groups.boundary_face[gp] / 2;
          ex = f.u_x.col(p) - prob.boundary_grad(x, t);
          if (opt.boundary_h1 == BoundaryH1::Tangential) ex(axis) = 0.0;
          val += ex.squaredNorm();
        }
        sum_a += w * val;
        if (req.gradient) {
          const double c = 2.0 * grp.scale * w;
          adj.u(p) = c * e0;
          if (spinn) {
            adj.u_t(p) = c * et;
            adj.u_x.col(p) = c * ex;
          }
        }
        break;
      }
    }
  }
  switch (chunk.group) {
    case Group::Interior: part.residual += sum_a; break;
    case Group::Initial:
      part.init_pos += sum_a;
      part.init_vel += sum_b;
      break;
    case Group::Boundary: part.boundary += sum_a; break;
  }
  if (req.gradient) {
    Mlp g = backward(params, jf.tape, adj);
    if (part.has_gradient) {
      add_into(part.gradient, g);
    } else {
      part.gradient = std::move(g);
      part.has_gradient = true;
    }
  }
}

void append_chunks(std::vector<Chunk>& chunks, Group g, Eigen::Index n) {
  for (Eigen::Index s = 0; s < n; s += kChunk) chunks.push_back({g, s, std::min(kChunk, n - s)});
}

}  // namespace

std::string to_string(LossMode m) { return m == LossMode::Spinn ? "spinn" : "pinn"; }
std::string to_string(BoundaryH1 b) {
  return b == BoundaryH1::Tangential ? "tangential" : "all_coords";
}

LossMode parse_loss_mode(const std::string& s) {
  if (s == "spinn" || s == "SPINN") return LossMode::Spinn;
  if (s == "pinn" || s == "PINN") return LossMode::Pinn;
  throw std::invalid_argument("unknown loss mode '" + s + "'");
}

BoundaryH1 parse_boundary_h1(const std::string& s) {
  if (s == "tangential") return BoundaryH1::Tangential;
  if (s == "all_coords") return BoundaryH1::AllCoords;
  throw std::invalid_argument("unknown boundary_h1 mode '" + s + "'");
}

LossGroups empirical_groups(const SampleSet& s) {
  const Box& box = s.domain;
  LossGroups g;
  g.interior.points = s.interior;
  g.interior.scale = box.volume() * box.T / double(std::max<Eigen::Index>(1, s.n_interior()));
  g.initial.points = s.initial;
  g.initial.scale = box.volume() / double(std::max<Eigen::Index>(1, s.n_initial()));
  g.boundary.points = s.boundary;
  g.boundary.scale =
      box.boundary_measure() * box.T / double(std::max<Eigen::Index>(1, s.n_boundary()));
  g.boundary_face = s.boundary_face;
  return g;
}

LossGroups quadrature_groups(const Box& box, int q) {
  if (q < 2) throw std::invalid_argument("quadrature_groups: need >= 2 points per axis");
  const int d = box.dim();
  auto midpoint = [q](double lo, double hi, int i) { return lo + (i + 0.5) * (hi - lo) / q; };

  // Tensor grid over the first `dims` coordinates of a (d+1)-vector template.
  auto tensor = [&](const std::vector<std::pair<double, double>>& ranges) {
    const int dims = static_cast<int>(ranges.size());
    Eigen::Index total = 1;
    for (int i = 0; i < dims; ++i) total *= q;
    Eigen::MatrixXd pts(dims, total);
    for (Eigen::Index c = 0; c < total; ++c) {
      Eigen::Index rem = c;
      for (int i = dims - 1; i >= 0; --i) {
        pts(i, c) = midpoint(ranges[i].first, ranges[i].second, static_cast<int>(rem % q));
        rem /= q;
      }
    }
    return pts;
  };

  LossGroups g;
  std::vector<std::pair<double, double>> space;
  for (int i = 0; i < d; ++i) space.emplace_back(box.lo(i), box.hi(i));

  auto st = space;
  st.emplace_back(0.0, box.T);
  g.interior.points = tensor(st);
  g.interior.scale = box.volume() * box.T / double(g.interior.points.cols());

  Eigen::MatrixXd init_space = tensor(space);
  g.initial.points = Eigen::MatrixXd::Zero(d + 1, init_space.cols());
  g.initial.points.topRows(d) = init_space;
  g.initial.scale = box.volume() / double(init_space.cols());

  std::vector<Eigen::MatrixXd> faces;
  std::vector<double> face_weight;
  Eigen::Index n_bd = 0;
  for (int f = 0; f < 2 * d; ++f) {
    const int axis = f / 2;
    std::vector<std::pair<double, double>> ranges;
    for (int i = 0; i < d; ++i)
      if (i != axis) ranges.emplace_back(box.lo(i), box.hi(i));
    ranges.emplace_back(0.0, box.T);
    Eigen::MatrixXd sub = tensor(ranges);  // (d-1 tangential + time) x n
    Eigen::MatrixXd pts(d + 1, sub.cols());
    int r = 0;
    for (int i = 0; i < d; ++i) {
      if (i == axis)
        pts.row(i).setConstant(f % 2 == 0 ? box.lo(i) : box.hi(i));
      else
        pts.row(i) = sub.row(r++);
    }
    pts.row(d) = sub.row(r);
    face_weight.push_back(box.face_measure(axis) * box.T / double(sub.cols()));
    n_bd += sub.cols();
    faces.push_back(std::move(pts));
  }
  g.boundary.points.resize(d + 1, n_bd);
  g.boundary.weights.resize(n_bd);
  Eigen::Index at = 0;
  for (int f = 0; f < 2 * d; ++f) {
    g.boundary.points.middleCols(at, faces[f].cols()) = faces[f];
    g.boundary.weights.segment(at, faces[f].cols()).setConstant(face_weight[f]);
    for (Eigen::Index c = 0; c < faces[f].cols(); ++c) g.boundary_face.push_back(f);
    at += faces[f].cols();
  }
  g.boundary.scale = 1.0;
  return g;
}

LossEvaluation evaluate_loss(const Mlp& params, const WaveProblem& prob, const LossGroups& groups,
                             const LossOptions& options, const LossRequest& request) {
  const int d = prob.dim();
  if (params.input_dim() != d + 1)
    throw std::invalid_argument("loss: network input width does not match problem dimension");
  if (options.mode == LossMode::Spinn && options.boundary_h1 == BoundaryH1::AllCoords &&
      !prob.boundary_grad_full && groups.boundary.points.cols() > 0)
    throw std::invalid_argument("loss: all_coords boundary H1 needs the full gradient of g, which " +
                                prob.name + " does not supply");
  if (static_cast<Eigen::Index>(groups.boundary_face.size()) != groups.boundary.points.cols())
    throw std::invalid_argument("loss: boundary face labels missing");

  std::vector<Chunk> chunks;
  append_chunks(chunks, Group::Interior, groups.interior.points.cols());
  append_chunks(chunks, Group::Initial, groups.initial.points.cols());
  append_chunks(chunks, Group::Boundary, groups.boundary.points.cols());

  LossEvaluation out;
  if (request.residuals) out.residual_sq.resize(groups.interior.points.cols());
  Eigen::VectorXd* res = request.residuals ? &out.residual_sq : nullptr;

  const std::size_t n_slabs = std::min(kSlabs, std::max<std::size_t>(1, chunks.size()));
  std::vector<Partial> slabs(n_slabs);
  parallel_for(n_slabs, [&](std::size_t s) {
    for (std::size_t c = s; c < chunks.size(); c += n_slabs)
      run_chunk(params, prob, groups, options, request, chunks[c], slabs[s], res);
  });

  // Reduce slabs in index order.
  Partial sum;
  for (auto& s : slabs) {
    sum.residual += s.residual;
    sum.init_pos += s.init_pos;
    sum.init_vel += s.init_vel;
    sum.boundary += s.boundary;
    if (request.gradient && s.has_gradient) {
      if (sum.has_gradient) {
        add_into(sum.gradient, s.gradient);
      } else {
        sum.gradient = std::move(s.gradient);
        sum.has_gradient = true;
      }
    }
  }

  LossBreakdown& b = out.breakdown;
  b.mode = options.mode;
  b.residual = groups.interior.scale * sum.residual;
  b.init_pos = groups.initial.scale * sum.init_pos;
  b.init_vel = groups.initial.scale * sum.init_vel;
  b.boundary = groups.boundary.scale * sum.boundary;
  b.total = b.residual + b.init_pos + b.init_vel + b.boundary;
  if (request.gradient) out.gradient = sum.has_gradient ? std::move(sum.gradient) : params.zeros_like();
  return out;
}

LossBreakdown empirical_loss(const Mlp& params, const WaveProblem& prob, const SampleSet& samples,
                             const LossOptions& options) {
  return evaluate_loss(params, prob, empirical_groups(samples), options, {}).breakdown;
}

LossBreakdown population_loss(const Mlp& params, const WaveProblem& prob, int points_per_axis,
                              const LossOptions& options) {
  return evaluate_loss(params, prob, quadrature_groups(prob.domain, points_per_axis), options, {})
      .breakdown;
}

Mlp loss_gradient(const Mlp& params, const WaveProblem& prob, const SampleSet& samples,
                  const LossOptions& options) {
  return evaluate_loss(params, prob, empirical_groups(samples), options, {true, false}).gradient;
}

Eigen::VectorXd interior_residuals(const Mlp& params, const WaveProblem& prob,
                                   const SampleSet& samples) {
  LossGroups g;
  g.interior.points = samples.interior;
  g.interior.scale = 1.0;
  g.initial.points.resize(prob.dim() + 1, 0);
  g.boundary.points.resize(prob.dim() + 1, 0);
  return evaluate_loss(params, prob, g, {}, {false, true}).residual_sq;
}

}  // namespace spinnwave
