#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "spinnwave/fdm.hpp"
#include "spinnwave/metrics.hpp"
#include "spinnwave/problem.hpp"
#include "spinnwave/trainer.hpp"

namespace spinnwave {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReferenceKind { None, Exact, Fdm };

struct ReferenceConfig {
  ReferenceKind kind = ReferenceKind::None;
  FdmMesh mesh;           // kind == Fdm
  int eval_space_stride = 1;  // subsampling of the FDM grid for rel_l2
  int eval_time_stride = 1;
  int n_space = 101;  // kind == Exact: nodes per spatial axis
  int n_time = 101;
};

struct OutputConfig {
  std::string directory = "out";
  int log_every = 100;
  int checkpoint_every = 0;
};

/// Everything a CLI run needs. Unknown keys anywhere are rejected.
struct RunConfig {
  std::string problem = "manufactured1d";
  NetConfig network;
  SampleConfig sampling;
  TrainConfig training;
  ReferenceConfig reference;
  OutputConfig outputs;
};

/// Throws ConfigError with the offending key path.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical form: every key written, defaults included.
nlohmann::json to_json(const RunConfig& c);

std::string to_string(ReferenceKind k);

/// Builds the evaluation reference a config asks for (nullopt for None).
std::optional<SpaceTimeGrid> build_reference(const RunConfig& c, const WaveProblem& prob);

}  // namespace spinnwave
