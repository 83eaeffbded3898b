#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinnwave/checkpoint.hpp"
#include "spinnwave/config.hpp"
#include "spinnwave/fdm.hpp"
#include "spinnwave/metrics.hpp"
#include "spinnwave/planner.hpp"
#include "spinnwave/trainer.hpp"

namespace spinnwave::cli {
namespace fs = std::filesystem;
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Refuses a non-empty directory unless --force; creates it otherwise.
void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw UsageError("output directory " + dir.string() + " is not empty (use --force)");
  }
  fs::create_directories(dir);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* opt = cmd->add_option("--config", f.config, "run configuration (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", f.out, "output directory (overrides outputs.directory)");
  cmd->add_option("--seed", f.seed, "seed for network, sampling and GAS streams");
  cmd->add_flag("--force", f.force, "overwrite a non-empty output directory");
}

RunConfig load_with_overrides(const CommonFlags& f) {
  RunConfig c = load_run_config(f.config);
  if (!f.out.empty()) c.outputs.directory = f.out;
  if (f.seed) {
    c.network.seed = *f.seed;
    c.sampling.seed = *f.seed;
    c.training.seed = *f.seed;
  }
  return c;
}

struct TrainOutcome {
  TrainResult result;
  std::optional<SpaceTimeGrid> reference;
};

/// Runs one configured training job and writes its artefacts into `dir`.
TrainOutcome run_training(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const WaveProblem prob = problem_by_name(c.problem);
  TrainOutcome o;
  o.reference = build_reference(c, prob);
  write_json(dir / "config.json", to_json(c));

  std::ofstream csv(dir / "metrics.csv");
  csv << kMetricHeader << '\n';
  fs::create_directories(dir / "checkpoints");
  TrainHooks hooks;
  hooks.reference = o.reference ? &*o.reference : nullptr;
  hooks.on_log = [&](const MetricRow& r) {
    csv << to_csv_line(r) << '\n';
    csv.flush();
    out << "epoch " << r.epoch << " loss " << r.loss.total;
    if (r.rel_l2) out << " rel_l2 " << *r.rel_l2;
    out << '\n';
  };
  hooks.on_checkpoint = [&](int epoch, const Mlp& p) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%07d.ckpt", epoch);
    save_checkpoint(dir / "checkpoints" / name, p);
  };
  o.result = train(prob, c.network, c.sampling, c.training, hooks);
  save_checkpoint(dir / "final.ckpt", o.result.params);
  write_samples_csv(dir / "samples.csv", o.result.samples);
  return o;
}

nlohmann::json evaluation_json(const Mlp& params, const WaveProblem& prob,
                               const std::optional<SpaceTimeGrid>& reference) {
  nlohmann::json j;
  if (reference) j["error"] = to_json(error_report(params, *reference, prob, false));
  const StabilityReport st = stability_diagnostic(params, prob, default_energy_constant(prob.domain.T), 64,
                                                  reference && prob.exact ? &*reference : nullptr);
  j["stability"] = to_json(st);
  j["stability"]["C_T"] = default_energy_constant(prob.domain.T);
  j["population_loss"] = {{"spinn", population_loss(params, prob, 64, {LossMode::Spinn}).total},
                          {"pinn", population_loss(params, prob, 64, {LossMode::Pinn}).total}};
  return j;
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const RunConfig c = load_with_overrides(f);
  const fs::path dir = c.outputs.directory;
  prepare_output(dir, f.force);
  const TrainOutcome o = run_training(c, dir, out);
  const auto& last = o.result.log.back();
  out << "final loss " << last.loss.total;
  if (last.rel_l2) out << " rel_l2 " << *last.rel_l2;
  out << " gas_rounds " << o.result.gas_rounds << '\n';
  return kExitOk;
}

void write_fdm_outputs(const GridSolution& sol, const WaveProblem& prob, const fs::path& dir) {
  write_grid_binary(dir / "solution", sol);
  const EnergyTrace tr = energy_trace(sol);
  write_energy_csv(dir / "energy.csv", tr);
  const double C_T = default_energy_constant(prob.domain.T);
  const EnergyInequalityReport rep = check_energy_inequality(sol, prob, C_T);
  write_json(dir / "energy_check.json", {{"C_T", C_T},
                                         {"lhs", rep.lhs},
                                         {"rhs", rep.rhs},
                                         {"source_term", rep.source_term},
                                         {"flux_term", rep.flux_term},
                                         {"satisfied", rep.satisfied}});
  fs::create_directories(dir / "frames");
  const Eigen::Index L = sol.grid.times.size();
  const Eigen::Index picks[] = {0, L / 2, L - 1};
  const double lim = sol.grid.values.cwiseAbs().maxCoeff();
  for (Eigen::Index n : picks) {
    char name[32];
    std::snprintf(name, sizeof name, "level_%06ld", static_cast<long>(n));
    write_frame_csv(dir / "frames" / (std::string(name) + ".csv"), sol.grid, n);
    if (sol.grid.dim() == 2)
      write_pgm(dir / "frames" / (std::string(name) + ".pgm"), frame_2d(sol.grid, n), -lim, lim);
  }
}

int cmd_fdm(const CommonFlags& f, std::ostream& out) {
  const RunConfig c = load_with_overrides(f);
  const WaveProblem prob = problem_by_name(c.problem);
  const GridSolution sol = solve_fdm(prob, c.reference.mesh);
  const fs::path dir = c.outputs.directory;
  prepare_output(dir, f.force);
  write_fdm_outputs(sol, prob, dir);
  out << "fdm " << prob.name << " levels " << sol.grid.times.size() << " nodes " << sol.grid.n_spatial()
      << " dt " << sol.dt << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f, const std::string& checkpoint, std::ostream& out) {
  const RunConfig c = load_with_overrides(f);
  const WaveProblem prob = problem_by_name(c.problem);
  const Mlp params = load_checkpoint(checkpoint);
  const auto reference = build_reference(c, prob);
  const nlohmann::json j = evaluation_json(params, prob, reference);
  if (!f.out.empty()) {
    const fs::path dir = c.outputs.directory;
    prepare_output(dir, f.force);
    write_json(dir / "evaluation.json", j);
    if (reference) {
      const SpaceTimeGrid err = pointwise_abs_error(params, *reference);
      const Eigen::Index last = err.times.size() - 1;
      write_frame_csv(dir / "pointwise_final.csv", err, last);
      if (err.dim() == 2) write_pgm(dir / "pointwise_final.pgm", frame_2d(err, last), 0.0, err.values.maxCoeff());
    }
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

std::optional<int> first_below(const std::vector<MetricRow>& log, double threshold) {
  for (const auto& r : log)
    if (r.rel_l2 && *r.rel_l2 < threshold) return r.epoch;
  return std::nullopt;
}

int cmd_compare(const std::vector<std::string>& configs, const CommonFlags& f, std::ostream& out) {
  if (configs.size() != 2) throw UsageError("compare needs exactly two --config files");
  RunConfig a = load_run_config(configs[0]);
  RunConfig b = load_run_config(configs[1]);
  if (a.problem != b.problem || to_json(a)["reference"] != to_json(b)["reference"])
    throw UsageError("compare: configs must share problem and reference");
  if (a.reference.kind == ReferenceKind::None) throw UsageError("compare: a reference is required");
  if (f.seed) {
    for (RunConfig* c : {&a, &b}) c->network.seed = c->sampling.seed = c->training.seed = *f.seed;
  }
  const fs::path dir = f.out.empty() ? fs::path(a.outputs.directory) : fs::path(f.out);
  prepare_output(dir, f.force);
  std::ostringstream sink;
  const std::string la = to_string(a.training.loss.mode), lb = to_string(b.training.loss.mode);
  const std::string tag_a = la == lb ? la + "_a" : la, tag_b = la == lb ? lb + "_b" : lb;
  fs::create_directories(dir / tag_a);
  fs::create_directories(dir / tag_b);
  const TrainOutcome ra = run_training(a, dir / tag_a, sink);
  const TrainOutcome rb = run_training(b, dir / tag_b, sink);

  std::map<int, std::pair<const MetricRow*, const MetricRow*>> joined;
  for (const auto& r : ra.result.log) joined[r.epoch].first = &r;
  for (const auto& r : rb.result.log) joined[r.epoch].second = &r;
  std::ofstream csv(dir / "compare.csv");
  csv.precision(17);
  csv << "epoch,rel_l2_" << tag_a << ",rel_l2_" << tag_b << ",loss_" << tag_a << ",loss_" << tag_b << '\n';
  auto cell = [&csv](const MetricRow* r, bool err) {
    if (!r) return;
    if (err) {
      if (r->rel_l2) csv << *r->rel_l2;
    } else {
      csv << r->loss.total;
    }
  };
  for (const auto& [epoch, rows] : joined) {
    csv << epoch << ',';
    cell(rows.first, true);
    csv << ',';
    cell(rows.second, true);
    csv << ',';
    cell(rows.first, false);
    csv << ',';
    cell(rows.second, false);
    csv << '\n';
  }

  std::ofstream sum(dir / "summary.csv");
  sum.precision(17);
  sum << "metric," << tag_a << ',' << tag_b << '\n';
  sum << "final_rel_l2," << *ra.result.log.back().rel_l2 << ',' << *rb.result.log.back().rel_l2 << '\n';
  nlohmann::json js;
  js["final_rel_l2"] = {{tag_a, *ra.result.log.back().rel_l2}, {tag_b, *rb.result.log.back().rel_l2}};
  for (double thr : {0.2, 0.1, 0.05}) {
    const auto ea = first_below(ra.result.log, thr), eb = first_below(rb.result.log, thr);
    std::ostringstream key;
    key << "first_epoch_below_" << thr;
    sum << key.str() << ',' << (ea ? std::to_string(*ea) : "") << ',' << (eb ? std::to_string(*eb) : "") << '\n';
    js[key.str()] = {{tag_a, ea ? nlohmann::json(*ea) : nlohmann::json(nullptr)},
                     {tag_b, eb ? nlohmann::json(*eb) : nlohmann::json(nullptr)}};
  }
  out << js.dump(2) << '\n';
  return kExitOk;
}

struct PlanFlags {
  double eps = 0.0;
  int d = 1;
  double delta = 0.1;
  std::optional<double> k1, k2, kt1, kt2;
  PlanConstants constants;
  std::optional<double> net_depth, net_width, f_K;
  double c_net = 1.0;
};

int cmd_plan(const PlanFlags& p, std::ostream& out) {
  ExponentSplit split;
  split.k1 = p.k1 ? *p.k1 : (p.k2 ? 2.0 + p.delta - *p.k2 : 0.5 * (2.0 + p.delta));
  split.k2 = p.k2 ? *p.k2 : 2.0 + p.delta - split.k1;
  split.ktil1 = p.kt1 ? *p.kt1 : (p.kt2 ? p.d + 1.0 - *p.kt2 : 0.5 * (p.d + 1.0));
  split.ktil2 = p.kt2 ? *p.kt2 : p.d + 1.0 - split.ktil1;
  nlohmann::json j = to_json(plan(p.eps, p.d, p.delta, split, p.constants));
  if (p.net_depth || p.net_width) {
    if (!p.net_depth || !p.net_width) throw std::invalid_argument("plan: give both --net-depth and --net-width");
    const double D = *p.net_depth, W = *p.net_width;
    const double capacity = D * D * W * W * (D + std::log(W));
    const double fK = p.f_K ? *p.f_K : capacity;
    const NetworkSamplePlan s =
        sample_plan_for_network(p.eps, D, W, p.delta, split.k1, split.k2, fK, capacity / fK, p.c_net);
    j["network_samples"] = {{"D", D}, {"W", W}, {"f_K", fK}, {"f_M", capacity / fK}, {"C", p.c_net},
                            {"N", s.N}, {"K", s.K}, {"M", s.M},
                            {"unrounded", {{"N", s.N_real}, {"K", s.K_real}, {"M", s.M_real}}}};
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      sizes.push_back(static_cast<std::size_t>(std::stod(tok)));
    } catch (const std::exception&) {
      throw UsageError("--sizes: cannot parse '" + tok + "'");
    }
  }
  if (sizes.empty()) throw UsageError("--sizes: empty list");
  return sizes;
}

int cmd_probe(const CommonFlags& f, const std::string& checkpoint, const std::string& sizes, int repeats,
              int quad, std::ostream& out) {
  const RunConfig c = load_with_overrides(f);
  const WaveProblem prob = problem_by_name(c.problem);
  const Mlp params = checkpoint.empty() ? initial_params(c.network, prob)
                                        : load_checkpoint(checkpoint);
  DeviationProbeConfig pc;
  pc.sizes = parse_sizes(sizes);
  pc.repeats = repeats;
  pc.seed = f.seed ? *f.seed : c.sampling.seed;
  pc.quad_points = quad;
  const auto rows = deviation_probe(params, prob, pc);
  const fs::path dir = c.outputs.directory;
  prepare_output(dir, f.force);
  write_deviation_csv(dir / "deviation.csv", rows);
  for (const auto& r : rows) out << "N " << r.N << " mean_dev " << r.mean_dev << " std_dev " << r.std_dev << '\n';
  if (rows.size() >= 2) out << "loglog_slope " << loglog_slope(rows) << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spinnwave: stabilized PINN and FDM solvers for the wave equation"};
  app.require_subcommand(1);

  CommonFlags train_f, fdm_f, eval_f, cmp_f, probe_f;
  std::string eval_ckpt, probe_ckpt, probe_sizes = "100,1000,10000";
  int probe_repeats = 20, probe_quad = 256;
  std::vector<std::string> cmp_configs;
  PlanFlags plan_f;

  auto* train_cmd = app.add_subcommand("train", "train a network from a config");
  add_common(train_cmd, train_f);
  auto* fdm_cmd = app.add_subcommand("fdm", "solve the configured problem with central differences");
  add_common(fdm_cmd, fdm_f);
  auto* eval_cmd = app.add_subcommand("evaluate", "error and stability report for a checkpoint");
  add_common(eval_cmd, eval_f);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  auto* cmp_cmd = app.add_subcommand("compare", "train two configs and join their error traces");
  cmp_cmd->add_option("--config", cmp_configs, "two run configurations")->required()->expected(2);
  cmp_cmd->add_option("--out", cmp_f.out, "output directory");
  cmp_cmd->add_option("--seed", cmp_f.seed, "seed override for both runs");
  cmp_cmd->add_flag("--force", cmp_f.force, "overwrite a non-empty output directory");
  auto* plan_cmd = app.add_subcommand("plan", "width and sample schedules for a target accuracy");
  plan_cmd->add_option("--eps", plan_f.eps, "target accuracy in (0, 1]")->required();
  plan_cmd->add_option("--d", plan_f.d, "spatial dimension");
  plan_cmd->add_option("--delta", plan_f.delta, "delta > 0");
  plan_cmd->add_option("--k1", plan_f.k1);
  plan_cmd->add_option("--k2", plan_f.k2);
  plan_cmd->add_option("--kt1", plan_f.kt1);
  plan_cmd->add_option("--kt2", plan_f.kt2);
  plan_cmd->add_option("--c-width", plan_f.constants.width);
  plan_cmd->add_option("--c-n", plan_f.constants.N);
  plan_cmd->add_option("--c-k", plan_f.constants.K);
  plan_cmd->add_option("--c-m", plan_f.constants.M);
  plan_cmd->add_option("--net-depth", plan_f.net_depth, "network depth D for the per-network schedule");
  plan_cmd->add_option("--net-width", plan_f.net_width, "network width W for the per-network schedule");
  plan_cmd->add_option("--f-k", plan_f.f_K, "f_K factor (default: the whole capacity product)");
  plan_cmd->add_option("--c-net", plan_f.c_net);
  auto* probe_cmd = app.add_subcommand("probe", "population vs empirical loss deviation");
  add_common(probe_cmd, probe_f);
  probe_cmd->add_option("--checkpoint", probe_ckpt, "checkpoint (default: freshly initialized network)");
  probe_cmd->add_option("--sizes", probe_sizes, "comma-separated spatial sample counts");
  probe_cmd->add_option("--repeats", probe_repeats);
  probe_cmd->add_option("--quad", probe_quad, "population quadrature nodes per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train_f, out);
    if (*fdm_cmd) return cmd_fdm(fdm_f, out);
    if (*eval_cmd) return cmd_evaluate(eval_f, eval_ckpt, out);
    if (*cmp_cmd) return cmd_compare(cmp_configs, cmp_f, out);
    if (*plan_cmd) return cmd_plan(plan_f, out);
    if (*probe_cmd) return cmd_probe(probe_f, probe_ckpt, probe_sizes, probe_repeats, probe_quad, out);
  } catch (const CflViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitCfl;
  } catch (const NumericAbort& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace spinnwave::cli
