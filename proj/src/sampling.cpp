#include "spinnwave/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace spinnwave {
namespace {

double draw_open(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  double v = dist(rng);
  while (v <= lo || v >= hi) v = dist(rng);
  return v;
}

/// Uniform point on face `face` (spatial coordinates only).
Eigen::VectorXd draw_on_face(std::mt19937_64& rng, const Box& box, int face) {
  const int axis = face / 2;
  Eigen::VectorXd x(box.dim());
  for (int j = 0; j < box.dim(); ++j) {
    if (j == axis) {
      x(j) = (face % 2 == 0) ? box.lo(j) : box.hi(j);
    } else {
      std::uniform_real_distribution<double> dist(box.lo(j), box.hi(j));
      x(j) = dist(rng);
    }
  }
  return x;
}

/// Moves a spatial point inside the box onto its nearest face.
int project_to_face(const Box& box, Eigen::Ref<Eigen::VectorXd> x) {
  int best_face = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < box.dim(); ++axis) {
    const double to_lo = x(axis) - box.lo(axis);
    const double to_hi = box.hi(axis) - x(axis);
    if (to_lo < best) best = to_lo, best_face = 2 * axis;
    if (to_hi < best) best = to_hi, best_face = 2 * axis + 1;
  }
  const int axis = best_face / 2;
  x(axis) = (best_face % 2 == 0) ? box.lo(axis) : box.hi(axis);
  return best_face;
}

}  // namespace

std::vector<std::size_t> allocate_boundary(const Box& domain, std::size_t total) {
  const int n_faces = 2 * domain.dim();
  std::vector<double> exact(n_faces);
  const double measure = domain.boundary_measure();
  for (int f = 0; f < n_faces; ++f)
    exact[f] = double(total) * domain.face_measure(f / 2) / measure;
  std::vector<std::size_t> counts(n_faces);
  std::size_t assigned = 0;
  for (int f = 0; f < n_faces; ++f) {
    counts[f] = static_cast<std::size_t>(std::floor(exact[f]));
    assigned += counts[f];
  }
  std::vector<int> order(n_faces);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (int i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % n_faces]];
  return counts;
}

SampleSet sample_uniform(const Box& domain, const UniformSampling& c, std::uint64_t rng_seed) {
  domain.validate();
  if (c.N < 1 || c.M < 1 || c.K < 1)
    throw std::invalid_argument("sample_uniform: N, M, K must be >= 1");
  const int d = domain.dim();
  std::mt19937_64 rng(rng_seed);

  SampleSet s;
  s.domain = domain;
  s.N = c.N;
  s.M = c.M;
  s.K = c.K;

  Eigen::MatrixXd xs(d, c.N);
  for (std::size_t n = 0; n < c.N; ++n)
    for (int i = 0; i < d; ++i) xs(i, n) = draw_open(rng, domain.lo(i), domain.hi(i));
  Eigen::VectorXd ts(c.K);
  std::uniform_real_distribution<double> time(0.0, domain.T);
  for (std::size_t k = 0; k < c.K; ++k) ts(k) = time(rng);

  Eigen::MatrixXd ys(d, c.M);
  s.boundary_face.clear();
  const auto per_face = allocate_boundary(domain, c.M);
  std::size_t m = 0;
  for (int f = 0; f < 2 * d; ++f)
    for (std::size_t j = 0; j < per_face[f]; ++j, ++m) {
      ys.col(m) = draw_on_face(rng, domain, f);
    }

  s.interior.resize(d + 1, c.N * c.K);
  for (std::size_t n = 0; n < c.N; ++n)
    for (std::size_t k = 0; k < c.K; ++k) {
      const auto col = static_cast<Eigen::Index>(n * c.K + k);
      s.interior.col(col).head(d) = xs.col(n);
      s.interior(d, col) = ts(k);
    }

  s.boundary.resize(d + 1, c.M * c.K);
  m = 0;
  for (int f = 0; f < 2 * d; ++f)
    for (std::size_t j = 0; j < per_face[f]; ++j, ++m)
      for (std::size_t k = 0; k < c.K; ++k) {
        const auto col = static_cast<Eigen::Index>(m * c.K + k);
        s.boundary.col(col).head(d) = ys.col(m);
        s.boundary(d, col) = ts(k);
        s.boundary_face.push_back(f);
      }

  if (c.shared_initial) {
    s.initial.resize(d + 1, c.N);
    s.initial.topRows(d) = xs;
    s.initial.row(d).setZero();
  } else {
    const std::size_t n_init = c.n_initial == 0 ? c.N : c.n_initial;
    s.initial.resize(d + 1, n_init);
    for (std::size_t n = 0; n < n_init; ++n) {
      for (int i = 0; i < d; ++i) s.initial(i, n) = draw_open(rng, domain.lo(i), domain.hi(i));
      s.initial(d, n) = 0.0;
    }
  }
  return s;
}

void GasConfig::validate() const {
  if (period < 1) throw std::invalid_argument("gas: period must be >= 1");
  if (n_components < 1) throw std::invalid_argument("gas: n_components must be >= 1");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("gas: bandwidth must be > 0");
  if (rounds < 0) throw std::invalid_argument("gas: rounds must be >= 0");
}

Eigen::MatrixXd weighted_kmeans(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                int k, std::uint64_t rng_seed, Eigen::VectorXd& mass) {
  const Eigen::Index n = points.cols();
  if (n == 0 || k < 1) throw std::invalid_argument("weighted_kmeans: empty input");
  k = static_cast<int>(std::min<Eigen::Index>(k, n));
  std::mt19937_64 rng(rng_seed);
  if (!(weights.sum() > 0.0)) return weighted_kmeans(points, Eigen::VectorXd::Ones(n), k, rng_seed, mass);

  // k-means++ seeding with probabilities proportional to weight * distance^2.
  Eigen::MatrixXd centres(points.rows(), k);
  {
    std::discrete_distribution<Eigen::Index> first(weights.data(), weights.data() + n);
    centres.col(0) = points.col(first(rng));
    Eigen::VectorXd dist2 = (points.colwise() - centres.col(0)).colwise().squaredNorm().transpose();
    for (int c = 1; c < k; ++c) {
      Eigen::VectorXd score = weights.cwiseProduct(dist2);
      Eigen::Index pick;
      if (score.sum() > 0.0) {
        std::discrete_distribution<Eigen::Index> next(score.data(), score.data() + n);
        pick = next(rng);
      } else {
        pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
      }
      centres.col(c) = points.col(pick);
      dist2 = dist2.cwiseMin(
          (points.colwise() - centres.col(c)).colwise().squaredNorm().transpose());
    }
  }

  std::vector<int> label(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index p = 0; p < n; ++p) {
      Eigen::Index best;
      (centres.colwise() - points.col(p)).colwise().squaredNorm().minCoeff(&best);
      if (label[p] != best) label[p] = static_cast<int>(best), changed = true;
    }
    if (!changed && iter > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (Eigen::Index p = 0; p < n; ++p) {
      sums.col(label[p]) += weights(p) * points.col(p);
      w(label[p]) += weights(p);
    }
    for (int c = 0; c < k; ++c)
      if (w(c) > 0.0) centres.col(c) = sums.col(c) / w(c);
  }
  mass = Eigen::VectorXd::Zero(k);
  for (Eigen::Index p = 0; p < n; ++p) mass(label[p]) += weights(p);
  return centres;
}

SampleSet gas_resample(const Eigen::VectorXd& residuals, const SampleSet& current,
                       const GasConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  const Eigen::Index n_int = current.n_interior();
  if (residuals.size() == 0 || n_int == 0)
    throw std::invalid_argument("gas_resample: empty residual array");
  if (residuals.size() != n_int)
    throw std::invalid_argument("gas_resample: residuals not aligned with interior points");

  const Box& box = current.domain;
  const int d = box.dim();
  std::mt19937_64 rng(rng_seed);

  const Eigen::Index q = std::min<Eigen::Index>(10 * Eigen::Index(cfg.n_components), n_int);
  std::vector<Eigen::Index> idx(n_int);
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::VectorXd weights(q);
  std::vector<Eigen::Index> chosen;
  if (residuals.maxCoeff() > 0.0) {
    std::partial_sort(idx.begin(), idx.begin() + q, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      return residuals(a) > residuals(b) || (residuals(a) == residuals(b) && a < b);
    });
    chosen.assign(idx.begin(), idx.begin() + q);
    for (Eigen::Index i = 0; i < q; ++i) weights(i) = std::max(0.0, residuals(chosen[i]));
  } else {
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.assign(idx.begin(), idx.begin() + q);
    weights.setOnes();
  }
  Eigen::MatrixXd selected(d + 1, q);
  for (Eigen::Index i = 0; i < q; ++i) selected.col(i) = current.interior.col(chosen[i]);

  Eigen::VectorXd mass;
  const Eigen::MatrixXd centres = weighted_kmeans(selected, weights, cfg.n_components, rng(), mass);
  if (!(mass.sum() > 0.0)) mass.setOnes();
  std::discrete_distribution<Eigen::Index> pick(mass.data(), mass.data() + mass.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = cfg.bandwidth * box.spacetime_diagonal();

  auto inside = [&](const Eigen::VectorXd& z, bool open_space) {
    for (int i = 0; i < d; ++i) {
      if (open_space ? (z(i) <= box.lo(i) || z(i) >= box.hi(i))
                     : (z(i) < box.lo(i) || z(i) > box.hi(i)))
        return false;
    }
    return z(d) >= 0.0 && z(d) <= box.T;
  };
  auto draw = [&](bool open_space) {
    Eigen::VectorXd z(d + 1);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const auto c = pick(rng);
      for (int i = 0; i <= d; ++i) z(i) = centres(i, c) + sigma * normal(rng);
      if (inside(z, open_space)) return z;
    }
    throw std::runtime_error("gas_resample: mixture has no mass inside the domain");
  };

  SampleSet out = current;
  out.interior.conservativeResize(Eigen::NoChange, n_int + cfg.add_interior);
  for (std::size_t i = 0; i < cfg.add_interior; ++i) out.interior.col(n_int + i) = draw(true);

  const Eigen::Index n_bd = current.n_boundary();
  out.boundary.conservativeResize(Eigen::NoChange, n_bd + cfg.add_boundary);
  for (std::size_t i = 0; i < cfg.add_boundary; ++i) {
    Eigen::VectorXd z = draw(false);
    const int face = project_to_face(box, z.head(d));
    out.boundary.col(n_bd + i) = z;
    out.boundary_face.push_back(face);
  }

  const Eigen::Index n_in = current.n_initial();
  out.initial.conservativeResize(Eigen::NoChange, n_in + cfg.add_initial);
  for (std::size_t i = 0; i < cfg.add_initial; ++i) {
    Eigen::VectorXd z = draw(true);
    z(d) = 0.0;
    out.initial.col(n_in + i) = z;
  }
  return out;
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int d = s.domain.dim();
  out << "kind";
  for (int i = 1; i <= d; ++i) out << ",x_" << i;
  out << ",t\n";
  out.precision(17);
  auto dump = [&](const char* kind, const Eigen::MatrixXd& pts) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      out << kind;
      for (Eigen::Index r = 0; r < pts.rows(); ++r) out << ',' << pts(r, c);
      out << '\n';
    }
  };
  dump("interior", s.interior);
  dump("initial", s.initial);
  dump("boundary", s.boundary);
}

SampleSet read_samples_csv(const std::filesystem::path& path, const Box& domain) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const int d = domain.dim();
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> groups[3];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, cell;
    std::getline(ss, kind, ',');
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (static_cast<int>(v.size()) != d + 1) throw std::runtime_error("samples csv: bad row: " + line);
    int g = kind == "interior" ? 0 : kind == "initial" ? 1 : kind == "boundary" ? 2 : -1;
    if (g < 0) throw std::runtime_error("samples csv: unknown kind '" + kind + "'");
    groups[g].push_back(std::move(v));
  }
  auto to_matrix = [d](const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(d + 1, rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c)
      for (int r = 0; r <= d; ++r) m(r, c) = rows[c][r];
    return m;
  };
  SampleSet s;
  s.domain = domain;
  s.interior = to_matrix(groups[0]);
  s.initial = to_matrix(groups[1]);
  s.boundary = to_matrix(groups[2]);
  for (Eigen::Index c = 0; c < s.boundary.cols(); ++c) {
    Eigen::VectorXd x = s.boundary.col(c).head(d);
    s.boundary_face.push_back(project_to_face(domain, x));
  }
  s.N = static_cast<std::size_t>(s.n_interior());
  s.M = static_cast<std::size_t>(s.n_boundary());
  s.K = 1;
  return s;
}

}  // namespace spinnwave
