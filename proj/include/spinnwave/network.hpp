#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinnwave/domain.hpp"
#include "spinnwave/jets.hpp"
#include "spinnwave/kernels.hpp"

namespace spinnwave {

/// ReLU^3 multilayer perceptron.
///
/// `weights[l]` has shape n_{l+1} x n_l and `biases[l]` length n_{l+1}; the
/// activation follows every affine map except the last. n_0 = d + 1 and the
/// output width is 1.
template <typename Scalar>
struct MlpParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::uint64_t rng_seed = 0;

  Eigen::Index depth() const { return static_cast<Eigen::Index>(weights.size()); }
  Eigen::Index input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }

  std::vector<Eigen::Index> widths() const {
    std::vector<Eigen::Index> w;
    if (weights.empty()) return w;
    w.push_back(weights.front().cols());
    for (const auto& a : weights) w.push_back(a.rows());
    return w;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  bool same_shape(const MlpParams& other) const {
    if (weights.size() != other.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != other.weights[l].rows() ||
          weights[l].cols() != other.weights[l].cols() ||
          biases[l].size() != other.biases[l].size())
        return false;
    }
    return true;
  }

  MlpParams zeros_like() const {
    MlpParams z;
    z.rng_seed = rng_seed;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      z.weights.push_back(Matrix::Zero(weights[l].rows(), weights[l].cols()));
      z.biases.push_back(Vector::Zero(biases[l].size()));
    }
    return z;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    return true;
  }

  /// Validates the shape chain; throws std::invalid_argument.
  void validate() const {
    if (weights.empty() || weights.size() != biases.size())
      throw std::invalid_argument("MlpParams: need matching non-empty weight/bias lists");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (biases[l].size() != weights[l].rows())
        throw std::invalid_argument("MlpParams: bias " + std::to_string(l) + " length mismatch");
      if (l > 0 && weights[l].cols() != weights[l - 1].rows())
        throw std::invalid_argument("MlpParams: layer " + std::to_string(l) +
                                    " input width mismatch");
    }
    if (weights.back().rows() != 1) throw std::invalid_argument("MlpParams: output width must be 1");
  }

  /// Parameters as one vector, layer by layer: A_l column-major then b_l.
  Vector flatten() const {
    Vector flat(parameter_count());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      flat.segment(at, weights[l].size()) = weights[l].reshaped();
      at += weights[l].size();
      flat.segment(at, biases[l].size()) = biases[l];
      at += biases[l].size();
    }
    return flat;
  }

  void assign(const Vector& flat) {
    if (flat.size() != parameter_count())
      throw std::invalid_argument("MlpParams::assign: size mismatch");
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l].reshaped() = flat.segment(at, weights[l].size());
      at += weights[l].size();
      biases[l] = flat.segment(at, biases[l].size());
      at += biases[l].size();
    }
  }

  /// FNV-1a over the raw parameter bytes; used to detect stale tapes.
  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const Scalar* data, Eigen::Index n) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(Scalar); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
      }
    };
    for (std::size_t l = 0; l < weights.size(); ++l) {
      mix(weights[l].data(), weights[l].size());
      mix(biases[l].data(), biases[l].size());
    }
    return h;
  }

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
      if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    return true;
  }
};

using Mlp = MlpParams<double>;

/// Glorot-uniform weights in +-sqrt(6 / (n_in + n_out)), zero biases.
/// `depth` counts affine maps, so depth - 1 hidden layers of `width` neurons.
template <typename Scalar = double>
MlpParams<Scalar> init_mlp(int depth, int width, int input_dim, std::uint64_t rng_seed) {
  if (depth < 2 || width < 1 || input_dim < 1)
    throw std::invalid_argument("init_mlp: need depth >= 2, width >= 1, input_dim >= 1 (got " +
                                std::to_string(depth) + ", " + std::to_string(width) + ", " +
                                std::to_string(input_dim) + ")");
  MlpParams<Scalar> p;
  p.rng_seed = rng_seed;
  std::mt19937_64 rng(rng_seed);
  int n_in = input_dim;
  for (int l = 0; l < depth; ++l) {
    const int n_out = (l == depth - 1) ? 1 : width;
    const double limit = std::sqrt(6.0 / double(n_in + n_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    typename MlpParams<Scalar>::Matrix a(n_out, n_in);
    for (int i = 0; i < n_out; ++i)
      for (int j = 0; j < n_in; ++j) a(i, j) = Scalar(dist(rng));
    p.weights.push_back(std::move(a));
    p.biases.push_back(MlpParams<Scalar>::Vector::Zero(n_out));
    n_in = n_out;
  }
  return p;
}

/// Folds the map of Omega x [0, T] onto [-1, 1]^{d+1} into the first affine
/// layer. The result is still a plain MLP on raw coordinates.
template <typename Scalar>
void fold_input_normalization(MlpParams<Scalar>& p, const Box& domain) {
  const int d = domain.dim();
  if (p.input_dim() != d + 1)
    throw std::invalid_argument("fold_input_normalization: network input does not match domain");
  typename MlpParams<Scalar>::Vector scale(d + 1), centre(d + 1);
  for (int i = 0; i < d; ++i) {
    scale(i) = Scalar(2.0 / (domain.hi(i) - domain.lo(i)));
    centre(i) = Scalar(0.5 * (domain.hi(i) + domain.lo(i)));
  }
  scale(d) = Scalar(2.0 / domain.T);
  centre(d) = Scalar(0.5 * domain.T);
  p.weights[0] = p.weights[0] * scale.asDiagonal();
  p.biases[0] -= p.weights[0] * centre;
}

/// Plain forward pass over points stored as columns. Uses the same ordered
/// kernel and activation arithmetic as the jet pass, so values agree bit for
/// bit with `forward_jets`.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> forward(
    const MlpParams<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& points) {
  if (points.rows() != params.input_dim())
    throw std::invalid_argument("forward: point dimension " + std::to_string(points.rows()) +
                                " != network input " + std::to_string(params.input_dim()));
  using Matrix = typename MlpParams<Scalar>::Matrix;
  Matrix z = points;
  Matrix next;
  const auto depth = params.depth();
  for (Eigen::Index l = 0; l < depth; ++l) {
    detail::ordered_product(params.weights[l], z, next);
    next.colwise() += params.biases[l];
    if (l + 1 < depth) {
      const auto pos = (next.array() > Scalar(0)).template cast<Scalar>();
      const auto xp = next.array() * pos;
      z.resize(next.rows(), next.cols());
      z.array() = xp * xp * xp;
    } else {
      z.swap(next);
    }
  }
  return z;
}

/// Per-point function values and the derivatives the wave operator needs.
/// Spatial rows are indexed by coordinate; `batch` columns.
template <typename Scalar>
struct JetFields {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector u;
  Vector u_t;
  Vector u_tt;
  Matrix u_x;   // d x batch
  Matrix u_xx;  // d x batch

  static JetFields zeros(Eigen::Index spatial_dim, Eigen::Index batch) {
    JetFields f;
    f.u = Vector::Zero(batch);
    f.u_t = Vector::Zero(batch);
    f.u_tt = Vector::Zero(batch);
    f.u_x = Matrix::Zero(spatial_dim, batch);
    f.u_xx = Matrix::Zero(spatial_dim, batch);
    return f;
  }

  Eigen::Index batch() const { return u.size(); }
  Eigen::Index spatial_dim() const { return u_x.rows(); }
  Vector laplacian() const { return u_xx.colwise().sum().transpose(); }
};

/// Intermediate streams of one jet forward pass per input coordinate.
template <typename Scalar>
struct Tape {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Pass {
    std::vector<Matrix> inputs;  // streams entering affine map l
    std::vector<Matrix> pre;     // pre-activation streams of hidden layer l
  };

  std::vector<Pass> passes;
  std::uint64_t params_digest = 0;
  Eigen::Index batch = 0;
};

template <typename Scalar>
struct JetForward {
  JetFields<Scalar> fields;
  Tape<Scalar> tape;
};

/// Runs d+1 seeded jet passes (one per input coordinate) and assembles u,
/// its first derivatives and the diagonal second derivatives.
template <typename Scalar>
JetForward<Scalar> forward_jets(const MlpParams<Scalar>& params,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& points,
                                bool keep_tape = true) {
  const Eigen::Index n0 = params.input_dim();
  if (points.rows() != n0)
    throw std::invalid_argument("forward_jets: point dimension " + std::to_string(points.rows()) +
                                " != network input " + std::to_string(n0));
  const Eigen::Index d = n0 - 1;
  const Eigen::Index batch = points.cols();
  const Eigen::Index depth = params.depth();

  JetForward<Scalar> out;
  out.fields = JetFields<Scalar>::zeros(d, batch);
  if (keep_tape) {
    out.tape.passes.resize(static_cast<std::size_t>(n0));
    out.tape.params_digest = params.digest();
    out.tape.batch = batch;
  }

  for (Eigen::Index coord = 0; coord < n0; ++coord) {
    JetBatch<Scalar> h = seed(points, coord);
    typename Tape<Scalar>::Pass* rec = keep_tape ? &out.tape.passes[coord] : nullptr;
    for (Eigen::Index l = 0; l < depth; ++l) {
      if (rec) rec->inputs.push_back(h.streams());
      JetBatch<Scalar> pre = affine(h, params.weights[l], params.biases[l]);
      if (l + 1 < depth) {
        h = relu3(pre);
        if (rec) rec->pre.push_back(std::move(pre.streams()));
      } else {
        h = std::move(pre);
      }
    }
    if (coord == d) {
      out.fields.u = h.val().row(0).transpose();
      out.fields.u_t = h.d1().row(0).transpose();
      out.fields.u_tt = h.d2().row(0).transpose();
    } else {
      out.fields.u_x.row(coord) = h.d1().row(0);
      out.fields.u_xx.row(coord) = h.d2().row(0);
    }
  }
  return out;
}

/// Gradient of sum_p [adj.u_p u_p + adj.u_t_p u_t_p + ...] with respect to
/// every weight and bias, by reverse accumulation over the recorded jet
/// streams. Throws std::logic_error when the tape was recorded with other
/// parameter values.
template <typename Scalar>
MlpParams<Scalar> backward(const MlpParams<Scalar>& params, const Tape<Scalar>& tape,
                           const JetFields<Scalar>& adj) {
  using Matrix = typename MlpParams<Scalar>::Matrix;
  if (tape.passes.empty() || tape.params_digest != params.digest())
    throw std::logic_error("backward: stale tape (parameters changed since recording)");
  const Eigen::Index n0 = params.input_dim();
  const Eigen::Index d = n0 - 1;
  const Eigen::Index batch = tape.batch;
  if (adj.batch() != batch || adj.spatial_dim() != d)
    throw std::invalid_argument("backward: adjoint shape does not match tape");

  MlpParams<Scalar> grad = params.zeros_like();
  const Eigen::Index depth = params.depth();

  for (Eigen::Index coord = 0; coord < n0; ++coord) {
    const auto& rec = tape.passes[coord];
    Matrix g = Matrix::Zero(1, 3 * batch);
    if (coord == d) {
      g.leftCols(batch) = adj.u.transpose();
      g.middleCols(batch, batch) = adj.u_t.transpose();
      g.rightCols(batch) = adj.u_tt.transpose();
    } else {
      g.middleCols(batch, batch) = adj.u_x.row(coord);
      g.rightCols(batch) = adj.u_xx.row(coord);
    }
    if (g.isZero(Scalar(0))) continue;

    for (Eigen::Index l = depth - 1; l >= 0; --l) {
      grad.weights[l].noalias() += g * rec.inputs[l].transpose();
      grad.biases[l] += g.leftCols(batch).rowwise().sum();
      if (l == 0) break;

      Matrix h_bar = params.weights[l].transpose() * g;
      const Matrix& pre = rec.pre[l - 1];
      const auto p = pre.leftCols(batch).array();
      const auto s = pre.middleCols(batch, batch).array();
      const auto q = pre.rightCols(batch).array();
      const auto pos = (p > Scalar(0)).template cast<Scalar>();
      const auto pp = p * pos;
      const auto rho1 = Scalar(3) * pp * pp;
      const auto rho2 = Scalar(6) * pp;
      const auto rho3 = Scalar(6) * pos;
      const auto a_bar = h_bar.leftCols(batch).array();
      const auto b1_bar = h_bar.middleCols(batch, batch).array();
      const auto b2_bar = h_bar.rightCols(batch).array();

      Matrix next(h_bar.rows(), 3 * batch);
      next.leftCols(batch).array() =
          a_bar * rho1 + b1_bar * rho2 * s + b2_bar * (rho3 * s * s + rho2 * q);
      next.middleCols(batch, batch).array() = b1_bar * rho1 + Scalar(2) * b2_bar * rho2 * s;
      next.rightCols(batch).array() = b2_bar * rho1;
      g.swap(next);
    }
  }
  return grad;
}

/// Sampled sup-norm estimates of a network and its derivatives.
struct NormDiagnostic {
  double sup_value = 0.0;
  double sup_gradient = 0.0;  // max over |u_t|, |u_{x_i}|
  double sup_second = 0.0;    // max over |u_tt|, |u_{x_i x_i}|
  double bound = 0.0;         // C^2 estimate: max of the three
  std::size_t n_probe = 0;
};

/// Probes |u|, first and diagonal second derivatives at uniform points of
/// Omega x [0, T]. Points are drawn sequentially from one stream, so a
/// larger `n_probe` with the same seed probes a superset.
template <typename Scalar>
NormDiagnostic probe_c2_norm(const MlpParams<Scalar>& params, const Box& domain,
                             std::size_t n_probe, std::uint64_t rng_seed) {
  if (n_probe < 1) throw std::invalid_argument("probe_c2_norm: n_probe must be >= 1");
  const int d = domain.dim();
  if (params.input_dim() != d + 1)
    throw std::invalid_argument("probe_c2_norm: network input does not match domain");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pts(d + 1, n_probe);
  for (std::size_t p = 0; p < n_probe; ++p) {
    for (int i = 0; i < d; ++i)
      pts(i, p) = Scalar(domain.lo(i) + unit(rng) * (domain.hi(i) - domain.lo(i)));
    pts(d, p) = Scalar(unit(rng) * domain.T);
  }
  NormDiagnostic diag;
  diag.n_probe = n_probe;
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < pts.cols(); start += kChunk) {
    const Eigen::Index n = std::min<Eigen::Index>(kChunk, pts.cols() - start);
    const auto jf = forward_jets<Scalar>(params, pts.middleCols(start, n), false).fields;
    diag.sup_value = std::max<double>(diag.sup_value, jf.u.cwiseAbs().maxCoeff());
    double g = jf.u_t.cwiseAbs().maxCoeff();
    double s = jf.u_tt.cwiseAbs().maxCoeff();
    if (d > 0) {
      g = std::max<double>(g, jf.u_x.cwiseAbs().maxCoeff());
      s = std::max<double>(s, jf.u_xx.cwiseAbs().maxCoeff());
    }
    diag.sup_gradient = std::max(diag.sup_gradient, g);
    diag.sup_second = std::max(diag.sup_second, s);
  }
  diag.bound = std::max({diag.sup_value, diag.sup_gradient, diag.sup_second});
  return diag;
}

}  // namespace spinnwave
