#include "spinnwave/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "spinnwave/metrics.hpp"
#include "spinnwave/seeds.hpp"

namespace spinnwave {
namespace {

constexpr std::uint64_t kRedrawTag = 0x7265647261770000ULL;
constexpr std::uint64_t kGasTag = 0x6761730000000000ULL;
constexpr std::uint64_t kBatchTag = 0x6261746368000000ULL;

void check_finite(const LossBreakdown& b, int epoch) {
  const std::pair<const char*, double> terms[] = {{"residual", b.residual},
                                                  {"init_pos", b.init_pos},
                                                  {"init_vel", b.init_vel},
                                                  {"boundary", b.boundary},
                                                  {"total", b.total}};
  for (const auto& [name, v] : terms)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "residual=" << b.residual << " init_pos=" << b.init_pos << " init_vel=" << b.init_vel
         << " boundary=" << b.boundary;
      throw NumericAbort(epoch, name, os.str());
    }
}

Eigen::MatrixXd pick_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx,
                             std::size_t from, std::size_t to) {
  Eigen::MatrixXd out(m.rows(), Eigen::Index(to - from));
  for (std::size_t i = from; i < to; ++i) out.col(Eigen::Index(i - from)) = m.col(idx[i]);
  return out;
}

/// Shuffled partition of every group into `parts` subsets.
std::vector<SampleSet> partition(const SampleSet& s, int parts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto perm = [&rng](Eigen::Index n) {
    std::vector<Eigen::Index> p(n);
    std::iota(p.begin(), p.end(), Eigen::Index(0));
    std::shuffle(p.begin(), p.end(), rng);
    return p;
  };
  const auto pi = perm(s.n_interior()), p0 = perm(s.n_initial()), pb = perm(s.n_boundary());
  std::vector<SampleSet> out;
  for (int k = 0; k < parts; ++k) {
    auto lo = [k, parts](std::size_t n) { return n * k / parts; };
    auto hi = [k, parts](std::size_t n) { return n * (k + 1) / parts; };
    SampleSet b;
    b.domain = s.domain;
    b.interior = pick_columns(s.interior, pi, lo(pi.size()), hi(pi.size()));
    b.initial = pick_columns(s.initial, p0, lo(p0.size()), hi(p0.size()));
    b.boundary = pick_columns(s.boundary, pb, lo(pb.size()), hi(pb.size()));
    for (std::size_t i = lo(pb.size()); i < hi(pb.size()); ++i) b.boundary_face.push_back(s.boundary_face[pb[i]]);
    b.N = s.N;
    b.M = s.M;
    b.K = s.K;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

void adam_step(Mlp& params, const Mlp& grads, AdamState& st) {
  if (!params.same_shape(grads)) throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (st.step == 0 && st.m.weights.empty()) {
    st.m = params.zeros_like();
    st.v = params.zeros_like();
  }
  if (!params.same_shape(st.m) || !params.same_shape(st.v))
    throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = st.beta1 * m.array() + (1.0 - st.beta1) * g.array();
    v.array() = st.beta2 * v.array() + (1.0 - st.beta2) * g.array().square();
    p.array() -= st.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.eps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], st.m.weights[l], st.v.weights[l]);
    update(params.biases[l], grads.biases[l], st.m.biases[l], st.v.biases[l]);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (log_every < 1) throw std::invalid_argument("train: log_every must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be >= 0");
  if (minibatches < 1) throw std::invalid_argument("train: minibatches must be >= 1");
  if (!(lr >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
    throw std::invalid_argument("train: invalid Adam hyperparameters");
  if (gas) gas->validate();
}

NumericAbort::NumericAbort(int epoch_, std::string term_, const std::string& detail)
    : std::runtime_error("non-finite loss term '" + term_ + "' at epoch " + std::to_string(epoch_) +
                         " (" + detail + ")"),
      epoch(epoch_),
      term(std::move(term_)) {}

std::string to_csv_line(const MetricRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.epoch << ',' << r.loss.total << ',' << r.loss.residual << ',' << r.loss.init_pos << ','
     << r.loss.init_vel << ',' << r.loss.boundary << ',';
  if (r.rel_l2) os << *r.rel_l2;
  os << ',' << r.n_interior << ',' << r.n_boundary << ',' << r.n_initial << ',';
  os.precision(6);
  os << r.wall_seconds;
  return os.str();
}

TrainResult train(const WaveProblem& prob, const NetConfig& net, const SampleConfig& sampling,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  return train_from(initial_params(net, prob), prob, sampling, cfg, hooks);
}

Mlp initial_params(const NetConfig& net, const WaveProblem& prob) {
  Mlp p = init_mlp(net.depth, net.width, prob.dim() + 1, net.seed);
  if (net.normalize_input) fold_input_normalization(p, prob.domain);
  return p;
}

TrainResult train_from(Mlp params, const WaveProblem& prob, const SampleConfig& sampling,
                       const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  params.validate();
  if (params.input_dim() != prob.dim() + 1)
    throw std::invalid_argument("train: network input does not match the problem dimension");
  if (cfg.gas && sampling.redraw_each_epoch)
    throw std::invalid_argument("train: GAS and per-epoch redraw are mutually exclusive");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  TrainResult res;
  res.samples = sample_uniform(prob.domain, sampling.counts, sampling.seed);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;

  auto log_row = [&](int epoch, const LossBreakdown& loss) {
    MetricRow row;
    row.epoch = epoch;
    row.loss = loss;
    if (hooks.reference) row.rel_l2 = relative_l2(params, *hooks.reference);
    row.n_interior = res.samples.n_interior();
    row.n_boundary = res.samples.n_boundary();
    row.n_initial = res.samples.n_initial();
    row.wall_seconds = elapsed();
    res.log.push_back(row);
    if (hooks.on_log) hooks.on_log(row);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (sampling.redraw_each_epoch && epoch > 0)
      res.samples = sample_uniform(prob.domain, sampling.counts,
                                   derive_seed(sampling.seed, kRedrawTag, std::uint64_t(epoch)));
    if (cfg.gas && epoch > 0 && epoch % cfg.gas->period == 0 && res.gas_rounds < cfg.gas->rounds) {
      const Eigen::VectorXd r2 = interior_residuals(params, prob, res.samples);
      res.samples = gas_resample(r2, res.samples, *cfg.gas,
                                 derive_seed(cfg.seed, kGasTag, std::uint64_t(res.gas_rounds)));
      ++res.gas_rounds;
    }

    LossBreakdown epoch_loss;
    if (cfg.minibatches == 1) {
      const auto ev = evaluate_loss(params, prob, empirical_groups(res.samples), cfg.loss,
                                    LossRequest{true, false});
      epoch_loss = ev.breakdown;
      check_finite(epoch_loss, epoch);
      if (epoch % cfg.log_every == 0) log_row(epoch, epoch_loss);
      adam_step(params, ev.gradient, adam);
    } else {
      const auto batches =
          partition(res.samples, cfg.minibatches, derive_seed(cfg.seed, kBatchTag, std::uint64_t(epoch)));
      Mlp start = params;
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto ev = evaluate_loss(params, prob, empirical_groups(batches[b]), cfg.loss,
                                      LossRequest{true, false});
        check_finite(ev.breakdown, epoch);
        if (b == 0) epoch_loss.mode = ev.breakdown.mode;
        const double w = 1.0 / double(batches.size());
        epoch_loss.residual += w * ev.breakdown.residual;
        epoch_loss.init_pos += w * ev.breakdown.init_pos;
        epoch_loss.init_vel += w * ev.breakdown.init_vel;
        epoch_loss.boundary += w * ev.breakdown.boundary;
        epoch_loss.total += w * ev.breakdown.total;
        adam_step(params, ev.gradient, adam);
      }
      if (epoch % cfg.log_every == 0) {
        std::swap(params, start);
        log_row(epoch, epoch_loss);
        std::swap(params, start);
      }
    }
    if (!params.all_finite()) throw NumericAbort(epoch, "parameters", "Adam produced non-finite weights");
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs &&
        hooks.on_checkpoint)
      hooks.on_checkpoint(epoch + 1, params);
  }

  const LossBreakdown final_loss = empirical_loss(params, prob, res.samples, cfg.loss);
  check_finite(final_loss, cfg.epochs);
  log_row(cfg.epochs, final_loss);
  if (hooks.on_checkpoint) hooks.on_checkpoint(cfg.epochs, params);
  res.params = std::move(params);
  return res;
}

}  // namespace spinnwave
