#include "spinnwave/planner.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "spinnwave/loss.hpp"
#include "spinnwave/sampling.hpp"
#include "spinnwave/seeds.hpp"

namespace spinnwave {
namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::uint64_t ceil_count(double x) {
  if (!std::isfinite(x) || x > 1.8e19) throw std::overflow_error("planner: count overflows");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(x)));
}

void check_eps(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("planner: epsilon must be in (0, 1]");
}

}  // namespace

void ExponentSplit::validate(int d, double delta) const {
  if (k1 < 0 || k2 < 0 || ktil1 < 0 || ktil2 < 0)
    throw std::invalid_argument("planner: exponents must be nonnegative");
  if (!close_rel(k1 + k2, 2.0 + delta, 1e-12))
    throw std::invalid_argument("planner: k1 + k2 must equal 2 + delta");
  if (!close_rel(ktil1 + ktil2, double(d) + 1.0, 1e-12))
    throw std::invalid_argument("planner: ktil1 + ktil2 must equal d + 1");
}

ExponentSplit ExponentSplit::complete(int d, double delta, double k1, double ktil1) {
  return ExponentSplit{k1, 2.0 + delta - k1, ktil1, double(d) + 1.0 - ktil1};
}

int plan_depth(int d) {
  if (d < 1) throw std::invalid_argument("planner: d must be >= 1");
  int c = 0;
  while ((1 << c) < d) ++c;
  return c + 2;
}

TheoryPlan plan(double epsilon, int d, double delta, const ExponentSplit& split,
                const PlanConstants& constants) {
  check_eps(epsilon);
  if (!(delta > 0.0)) throw std::invalid_argument("planner: delta must be positive");
  split.validate(d, delta);
  TheoryPlan p;
  p.epsilon = epsilon;
  p.d = d;
  p.delta = delta;
  p.split = split;
  p.constants = constants;
  p.depth = plan_depth(d);
  // extended precision so each count is rounded once
  using LD = long double;
  const LD inv2 = 1.0L / (LD(epsilon) * LD(epsilon));
  const LD inv4 = inv2 * inv2;
  p.width_real = double(LD(constants.width) * std::pow(inv2, LD(d) + 1.0L));
  p.N_real = double(LD(constants.N) * std::pow(inv4, LD(d) + 3.0L + LD(delta)));
  p.K_real = double(LD(constants.K) * std::pow(inv4, LD(split.k1) + LD(split.ktil1)));
  p.M_real = double(LD(constants.M) * std::pow(inv4, LD(split.k2) + LD(split.ktil2)));
  p.width = ceil_count(p.width_real);
  p.N = ceil_count(p.N_real);
  p.K = ceil_count(p.K_real);
  p.M = ceil_count(p.M_real);
  return p;
}

nlohmann::json to_json(const TheoryPlan& p) {
  nlohmann::json j;
  j["epsilon"] = p.epsilon;
  j["d"] = p.d;
  j["delta"] = p.delta;
  j["split"] = {{"k1", p.split.k1}, {"k2", p.split.k2}, {"ktil1", p.split.ktil1}, {"ktil2", p.split.ktil2}};
  j["constants"] = {{"width", p.constants.width}, {"N", p.constants.N}, {"K", p.constants.K},
                    {"M", p.constants.M}, {"note", "unknown theory constants; counts hold up to these"}};
  j["depth"] = p.depth;
  j["width"] = p.width;
  j["N"] = p.N;
  j["K"] = p.K;
  j["M"] = p.M;
  j["unrounded"] = {{"width", p.width_real}, {"N", p.N_real}, {"K", p.K_real}, {"M", p.M_real}};
  return j;
}

NetworkSamplePlan sample_plan_for_network(double epsilon, double D, double W, double delta, double k1, double k2,
                            double f_K, double f_M, double C) {
  check_eps(epsilon);
  if (!(D >= 1.0) || !(W >= 1.0)) throw std::invalid_argument("planner: D and W must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("planner: delta must be positive");
  if (k1 < 0 || k2 < 0 || !close_rel(k1 + k2, 2.0 + delta, 1e-12))
    throw std::invalid_argument("planner: k1 + k2 must equal 2 + delta");
  const double capacity = D * D * W * W * (D + std::log(W));
  if (!(f_K > 0.0 && f_M > 0.0) || std::abs(f_K * f_M - capacity) > 1e-9 * capacity)
    throw std::invalid_argument("planner: f_K * f_M must equal D^2 W^2 (D + ln W)");
  using LD = long double;
  const LD inv = 1.0L / LD(epsilon), Dl = D, Wl = W, Cl = C;
  NetworkSamplePlan s;
  s.N_real = double(Cl * Dl * Dl * Dl * Dl * Wl * Wl * (Dl + std::log(Wl)) * std::pow(inv, 2.0L + LD(delta)));
  s.K_real = double(Cl * Dl * Dl * LD(f_K) * std::pow(inv, LD(k1)));
  s.M_real = double(Cl * LD(f_M) * std::pow(inv, LD(k2)));
  s.N = ceil_count(s.N_real);
  s.K = ceil_count(s.K_real);
  s.M = ceil_count(s.M_real);
  return s;
}

std::vector<DeviationRow> deviation_probe(const Mlp& params, const WaveProblem& prob,
                                          const DeviationProbeConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("deviation_probe: repeats must be >= 1");
  for (std::size_t i = 1; i < cfg.sizes.size(); ++i)
    if (cfg.sizes[i] <= cfg.sizes[i - 1]) throw std::invalid_argument("deviation_probe: sizes must ascend");
  const LossOptions opts;
  const double population = population_loss(params, prob, cfg.quad_points, opts).total;
  std::vector<DeviationRow> rows;
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    DeviationRow row;
    row.N = cfg.sizes[i];
    row.K = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.k_ratio * double(row.N))));
    row.M = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.m_ratio * double(row.N))));
    std::vector<double> dev(cfg.repeats);
    for (int r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t seed = derive_seed(cfg.seed, i, std::uint64_t(r));
      const SampleSet set = sample_uniform(prob.domain, UniformSampling{row.N, row.M, row.K, 0, false}, seed);
      dev[r] = std::abs(population - empirical_loss(params, prob, set, opts).total);
    }
    double mean = 0.0;
    for (double v : dev) mean += v;
    mean /= double(dev.size());
    double var = 0.0;
    for (double v : dev) var += (v - mean) * (v - mean);
    row.mean_dev = mean;
    row.std_dev = dev.size() > 1 ? std::sqrt(var / double(dev.size() - 1)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(const std::vector<DeviationRow>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(rows.size());
  for (const auto& r : rows) {
    const double x = std::log(double(r.N)), y = std::log(r.mean_dev);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_deviation_csv(const std::filesystem::path& path, const std::vector<DeviationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "N,mean_dev,std_dev\n";
  out.precision(17);
  for (const auto& r : rows) out << r.N << ',' << r.mean_dev << ',' << r.std_dev << '\n';
}

}  // namespace spinnwave
