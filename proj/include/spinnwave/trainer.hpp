#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinnwave/grid.hpp"
#include "spinnwave/loss.hpp"
#include "spinnwave/network.hpp"
#include "spinnwave/problem.hpp"
#include "spinnwave/sampling.hpp"

namespace spinnwave {

/// Adam moments and hyperparameters. `m` and `v` take the shape of the
/// parameters on the first step.
struct AdamState {
  Mlp m;
  Mlp v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update in place. Throws std::invalid_argument on a
/// shape mismatch between params, grads and state.
void adam_step(Mlp& params, const Mlp& grads, AdamState& state);

struct NetConfig {
  int depth = 4;
  int width = 32;
  std::uint64_t seed = 0;
  bool normalize_input = true;  // fold the box-to-[-1,1] map into layer 0
};

/// Initial parameters for `net` on the problem's domain.
Mlp initial_params(const NetConfig& net, const WaveProblem& prob);

struct SampleConfig {
  UniformSampling counts;
  std::uint64_t seed = 0;
  bool redraw_each_epoch = false;  // fresh uniform draw every epoch
};

struct TrainConfig {
  int epochs = 1000;
  LossOptions loss;
  std::optional<GasConfig> gas;
  std::uint64_t seed = 0;   // GAS draws
  int checkpoint_every = 0;  // 0: final only
  int log_every = 100;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int minibatches = 1;  // Adam steps per epoch over a shuffled partition

  void validate() const;
};

/// One row of the metric log.
struct MetricRow {
  int epoch = 0;
  LossBreakdown loss;
  std::optional<double> rel_l2;
  Eigen::Index n_interior = 0;
  Eigen::Index n_boundary = 0;
  Eigen::Index n_initial = 0;
  double wall_seconds = 0.0;
};

inline const char* kMetricHeader =
    "epoch,loss_total,loss_residual,loss_init_pos,loss_init_vel,loss_boundary,rel_l2_error,"
    "n_interior,n_boundary,n_initial,wall_seconds";

std::string to_csv_line(const MetricRow& row);

/// Raised when a loss term becomes NaN or infinite.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(int epoch, std::string term, const std::string& detail);
  int epoch;
  std::string term;
};

struct TrainHooks {
  const SpaceTimeGrid* reference = nullptr;  // enables rel_l2 in the log
  std::function<void(const MetricRow&)> on_log;
  std::function<void(int epoch, const Mlp&)> on_checkpoint;
};

struct TrainResult {
  Mlp params;
  std::vector<MetricRow> log;
  SampleSet samples;  // final training set
  int gas_rounds = 0;
};

/// Adam on the empirical loss. Rows are logged at epoch 0, every
/// `log_every` epochs and once more at `epochs` for the final parameters;
/// each row holds the loss of the parameters entering that epoch. GAS runs
/// at the start of epochs that are positive multiples of `period`, at most
/// `rounds` times.
TrainResult train(const WaveProblem& prob, const NetConfig& net, const SampleConfig& sampling,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Same, starting from given parameters.
TrainResult train_from(Mlp params, const WaveProblem& prob, const SampleConfig& sampling,
                       const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace spinnwave
