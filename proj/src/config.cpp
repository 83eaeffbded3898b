#include "spinnwave/config.hpp"

#include <fstream>
#include <set>

namespace spinnwave {
namespace {

using nlohmann::json;

/// Reads keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& at(const char* key) const { return j_.at(key); }
  std::string child(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where() + ": unknown key '" + k + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ReferenceKind parse_kind(const std::string& s) {
  if (s == "none") return ReferenceKind::None;
  if (s == "exact") return ReferenceKind::Exact;
  if (s == "fdm") return ReferenceKind::Fdm;
  throw ConfigError("reference.kind: expected none|exact|fdm, got '" + s + "'");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::None: return "none";
    case ReferenceKind::Exact: return "exact";
    case ReferenceKind::Fdm: return "fdm";
  }
  return "none";
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  Section top(j, "");
  top.get("problem", c.problem);
  try {
    (void)problem_by_name(c.problem);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }

  if (top.has("network")) {
    Section s(top.at("network"), "network");
    s.get("depth", c.network.depth);
    s.get("width", c.network.width);
    s.get("seed", c.network.seed);
    s.get("normalize_input", c.network.normalize_input);
    s.finish();
    require(c.network.depth >= 2 && c.network.width >= 1, "network: depth >= 2 and width >= 1 required");
  }

  if (top.has("sampling")) {
    Section s(top.at("sampling"), "sampling");
    s.get("N", c.sampling.counts.N);
    s.get("M", c.sampling.counts.M);
    s.get("K", c.sampling.counts.K);
    s.get("n_initial", c.sampling.counts.n_initial);
    s.get("shared_initial", c.sampling.counts.shared_initial);
    s.get("seed", c.sampling.seed);
    s.get("redraw_each_epoch", c.sampling.redraw_each_epoch);
    s.finish();
    require(c.sampling.counts.N >= 1 && c.sampling.counts.K >= 1, "sampling: N and K must be >= 1");
  }

  if (top.has("training")) {
    Section s(top.at("training"), "training");
    std::string mode = to_string(c.training.loss.mode);
    std::string bh1 = to_string(c.training.loss.boundary_h1);
    s.get("mode", mode);
    s.get("boundary_h1", bh1);
    try {
      c.training.loss.mode = parse_loss_mode(mode);
      c.training.loss.boundary_h1 = parse_boundary_h1(bh1);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("training: ") + e.what());
    }
    s.get("epochs", c.training.epochs);
    s.get("lr", c.training.lr);
    s.get("beta1", c.training.beta1);
    s.get("beta2", c.training.beta2);
    s.get("eps", c.training.eps);
    s.get("seed", c.training.seed);
    s.get("minibatches", c.training.minibatches);
    if (s.has("gas")) {
      Section g(s.at("gas"), s.child("gas"));
      GasConfig gas;
      g.get("period", gas.period);
      g.get("rounds", gas.rounds);
      g.get("add_interior", gas.add_interior);
      g.get("add_boundary", gas.add_boundary);
      g.get("add_initial", gas.add_initial);
      g.get("n_components", gas.n_components);
      g.get("bandwidth", gas.bandwidth);
      g.finish();
      c.training.gas = gas;
    }
    s.finish();
  }

  if (top.has("reference")) {
    Section s(top.at("reference"), "reference");
    std::string kind = "none";
    s.get("kind", kind);
    c.reference.kind = parse_kind(kind);
    s.get("dx", c.reference.mesh.dx);
    s.get("dy", c.reference.mesh.dy);
    s.get("dt", c.reference.mesh.dt);
    s.get("store_every", c.reference.mesh.store_every);
    s.get("eval_space_stride", c.reference.eval_space_stride);
    s.get("eval_time_stride", c.reference.eval_time_stride);
    s.get("n_space", c.reference.n_space);
    s.get("n_time", c.reference.n_time);
    s.finish();
    require(c.reference.eval_space_stride >= 1 && c.reference.eval_time_stride >= 1,
            "reference: strides must be >= 1");
    require(c.reference.n_space >= 2 && c.reference.n_time >= 2, "reference: n_space, n_time must be >= 2");
    if (c.reference.kind == ReferenceKind::Exact && !problem_by_name(c.problem).exact)
      throw ConfigError("reference.kind: problem '" + c.problem + "' has no closed form");
  }

  if (top.has("outputs")) {
    Section s(top.at("outputs"), "outputs");
    s.get("directory", c.outputs.directory);
    s.get("log_every", c.outputs.log_every);
    s.get("checkpoint_every", c.outputs.checkpoint_every);
    s.finish();
  }
  top.finish();

  c.training.log_every = c.outputs.log_every;
  c.training.checkpoint_every = c.outputs.checkpoint_every;
  try {
    c.training.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("training: ") + e.what());
  }
  if (c.training.gas && c.sampling.redraw_each_epoch)
    throw ConfigError("training.gas: cannot be combined with sampling.redraw_each_epoch");
  const std::filesystem::path parent = std::filesystem::path(c.outputs.directory).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw ConfigError("outputs.directory: parent '" + parent.string() + "' does not exist");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["network"] = {{"depth", c.network.depth}, {"width", c.network.width}, {"seed", c.network.seed},
                  {"normalize_input", c.network.normalize_input}};
  j["sampling"] = {{"N", c.sampling.counts.N},
                   {"M", c.sampling.counts.M},
                   {"K", c.sampling.counts.K},
                   {"n_initial", c.sampling.counts.n_initial},
                   {"shared_initial", c.sampling.counts.shared_initial},
                   {"seed", c.sampling.seed},
                   {"redraw_each_epoch", c.sampling.redraw_each_epoch}};
  json t = {{"mode", to_string(c.training.loss.mode)},
            {"boundary_h1", to_string(c.training.loss.boundary_h1)},
            {"epochs", c.training.epochs},
            {"lr", c.training.lr},
            {"beta1", c.training.beta1},
            {"beta2", c.training.beta2},
            {"eps", c.training.eps},
            {"seed", c.training.seed},
            {"minibatches", c.training.minibatches}};
  if (c.training.gas) {
    const GasConfig& g = *c.training.gas;
    t["gas"] = {{"period", g.period},
                {"rounds", g.rounds},
                {"add_interior", g.add_interior},
                {"add_boundary", g.add_boundary},
                {"add_initial", g.add_initial},
                {"n_components", g.n_components},
                {"bandwidth", g.bandwidth}};
  } else {
    t["gas"] = nullptr;
  }
  j["training"] = t;
  j["reference"] = {{"kind", to_string(c.reference.kind)},
                    {"dx", c.reference.mesh.dx},
                    {"dy", c.reference.mesh.dy},
                    {"dt", c.reference.mesh.dt},
                    {"store_every", c.reference.mesh.store_every},
                    {"eval_space_stride", c.reference.eval_space_stride},
                    {"eval_time_stride", c.reference.eval_time_stride},
                    {"n_space", c.reference.n_space},
                    {"n_time", c.reference.n_time}};
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"log_every", c.outputs.log_every},
                  {"checkpoint_every", c.outputs.checkpoint_every}};
  return j;
}

std::optional<SpaceTimeGrid> build_reference(const RunConfig& c, const WaveProblem& prob) {
  switch (c.reference.kind) {
    case ReferenceKind::None: return std::nullopt;
    case ReferenceKind::Exact: return reference_from_exact(prob, c.reference.n_space, c.reference.n_time);
    case ReferenceKind::Fdm: {
      const GridSolution sol = solve_fdm(prob, c.reference.mesh);
      return sol.grid.subsample(c.reference.eval_space_stride, c.reference.eval_time_stride);
    }
  }
  return std::nullopt;
}

}  // namespace spinnwave
