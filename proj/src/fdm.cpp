#include "spinnwave/fdm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace spinnwave {
namespace {

Eigen::Index divisions(double lo, double hi, double h) {
  const double n = (hi - lo) / h;
  const double r = std::round(n);
  if (r < 2 || std::abs(n - r) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("fdm: step " + std::to_string(h) + " does not divide [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<Eigen::Index>(r);
}

/// Derivative along one axis of a field sampled on a uniform grid:
/// centred inside, one-sided second order at both ends.
double axis_derivative(const Eigen::VectorXd& f, Eigen::Index i, double h) {
  const Eigen::Index n = f.size();
  if (i == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
  if (i == n - 1) return (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
  return (f(i + 1) - f(i - 1)) / (2.0 * h);
}

/// Time derivative at every stored level, same stencils.
Eigen::MatrixXd time_derivative(const SpaceTimeGrid& g) {
  const Eigen::Index L = g.times.size();
  Eigen::MatrixXd ut(g.values.rows(), L);
  for (Eigen::Index n = 0; n < L; ++n) {
    if (n == 0) {
      const double h = g.times(1) - g.times(0);
      ut.col(0) = (-3.0 * g.values.col(0) + 4.0 * g.values.col(1) - g.values.col(2)) / (2.0 * h);
    } else if (n == L - 1) {
      const double h = g.times(L - 1) - g.times(L - 2);
      ut.col(n) = (3.0 * g.values.col(n) - 4.0 * g.values.col(n - 1) + g.values.col(n - 2)) / (2.0 * h);
    } else {
      const double h = 0.5 * (g.times(n + 1) - g.times(n - 1));
      ut.col(n) = (g.values.col(n + 1) - g.values.col(n - 1)) / (2.0 * h);
    }
  }
  return ut;
}

/// Spatial gradient components of one frame, each shaped like the frame.
std::vector<Eigen::VectorXd> spatial_gradient(const SpaceTimeGrid& g, const Eigen::VectorXd& frame) {
  std::vector<Eigen::VectorXd> grad;
  if (g.dim() == 1) {
    const double h = g.axes[0](1) - g.axes[0](0);
    Eigen::VectorXd gx(frame.size());
    for (Eigen::Index i = 0; i < frame.size(); ++i) gx(i) = axis_derivative(frame, i, h);
    grad.push_back(gx);
  } else {
    const Eigen::Index nx = g.axes[0].size(), ny = g.axes[1].size();
    const double hx = g.axes[0](1) - g.axes[0](0), hy = g.axes[1](1) - g.axes[1](0);
    Eigen::VectorXd gx(frame.size()), gy(frame.size());
    Eigen::VectorXd line;
    for (Eigen::Index j = 0; j < ny; ++j) {
      line = frame.segment(j * nx, nx);
      for (Eigen::Index i = 0; i < nx; ++i) gx(j * nx + i) = axis_derivative(line, i, hx);
    }
    line.resize(ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
      for (Eigen::Index j = 0; j < ny; ++j) line(j) = frame(j * nx + i);
      for (Eigen::Index j = 0; j < ny; ++j) gy(j * nx + i) = axis_derivative(line, j, hy);
    }
    grad.push_back(gx);
    grad.push_back(gy);
  }
  return grad;
}

}  // namespace

double cfl_limit(int d, double dx, double dy) {
  if (d == 1) return kCflSafety * dx;
  return kCflSafety * std::min(dx, dy) / std::sqrt(2.0);
}

GridSolution solve_fdm(const WaveProblem& prob, const FdmMesh& mesh) {
  const Box& box = prob.domain;
  const int d = box.dim();
  if (d < 1 || d > 2) throw std::invalid_argument("fdm: only 1D and 2D problems are supported");
  if (!(mesh.dx > 0.0) || !(mesh.dt > 0.0) || mesh.store_every < 1)
    throw std::invalid_argument("fdm: dx, dt must be positive and store_every >= 1");
  const double dx = mesh.dx;
  const double dy = d == 2 ? (mesh.dy > 0.0 ? mesh.dy : mesh.dx) : 0.0;
  const double limit = cfl_limit(d, dx, dy);
  if (mesh.dt > limit)
    throw CflViolation("fdm: dt = " + std::to_string(mesh.dt) + " violates the CFL bound " +
                       std::to_string(limit));

  const Eigen::Index nx = divisions(box.lo(0), box.hi(0), dx) + 1;
  const Eigen::Index ny = d == 2 ? divisions(box.lo(1), box.hi(1), dy) + 1 : 1;
  const auto n_steps = static_cast<Eigen::Index>(std::ceil(box.T / mesh.dt - 1e-9));
  const double dt = box.T / double(n_steps);

  GridSolution sol;
  sol.domain = box;
  sol.dx = dx;
  sol.dy = dy;
  sol.dt = dt;
  sol.store_every = mesh.store_every;
  sol.grid.axes.push_back(Eigen::VectorXd::LinSpaced(nx, box.lo(0), box.hi(0)));
  if (d == 2) sol.grid.axes.push_back(Eigen::VectorXd::LinSpaced(ny, box.lo(1), box.hi(1)));
  const Eigen::Index ns = nx * ny;

  std::vector<Vec> nodes(ns);
  std::vector<char> on_boundary(ns, 0);
  for (Eigen::Index s = 0; s < ns; ++s) {
    nodes[s] = sol.grid.node(s);
    const Eigen::Index i = s % nx, j = s / nx;
    on_boundary[s] = (i == 0 || i == nx - 1 || (d == 2 && (j == 0 || j == ny - 1))) ? 1 : 0;
  }

  auto laplacian = [&](const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    out.setZero(ns);
    const double cx = 1.0 / (dx * dx);
    const double cy = d == 2 ? 1.0 / (dy * dy) : 0.0;
    for (Eigen::Index j = (d == 2 ? 1 : 0); j < (d == 2 ? ny - 1 : 1); ++j)
      for (Eigen::Index i = 1; i < nx - 1; ++i) {
        const Eigen::Index s = j * nx + i;
        double v = cx * (u(s + 1) - 2.0 * u(s) + u(s - 1));
        if (d == 2) v += cy * (u(s + nx) - 2.0 * u(s) + u(s - nx));
        out(s) = v;
      }
  };
  auto source = [&](double t, Eigen::VectorXd& out) {
    out.resize(ns);
    for (Eigen::Index s = 0; s < ns; ++s) out(s) = on_boundary[s] ? 0.0 : prob.source(nodes[s], t);
  };
  auto apply_boundary = [&](Eigen::VectorXd& u, double t) {
    for (Eigen::Index s = 0; s < ns; ++s)
      if (on_boundary[s]) u(s) = prob.boundary(nodes[s], t);
  };

  std::vector<double> stored_times;
  std::vector<Eigen::VectorXd> frames;
  auto store = [&](Eigen::Index n, const Eigen::VectorXd& u) {
    if (n % mesh.store_every == 0 || n == n_steps) {
      stored_times.push_back(double(n) * dt);
      frames.push_back(u);
    }
  };

  Eigen::VectorXd prev(ns), cur(ns), next(ns), lap, f;
  for (Eigen::Index s = 0; s < ns; ++s) prev(s) = prob.initial_position(nodes[s]);
  apply_boundary(prev, 0.0);
  store(0, prev);

  laplacian(prev, lap);
  source(0.0, f);
  for (Eigen::Index s = 0; s < ns; ++s)
    cur(s) = prev(s) + dt * prob.initial_velocity(nodes[s]) + 0.5 * dt * dt * (lap(s) + f(s));
  apply_boundary(cur, dt);
  store(1, cur);

  for (Eigen::Index n = 1; n < n_steps; ++n) {
    const double t = double(n) * dt;
    laplacian(cur, lap);
    source(t, f);
    next = 2.0 * cur - prev + dt * dt * (lap + f);
    apply_boundary(next, double(n + 1) * dt);
    store(n + 1, next);
    prev.swap(cur);
    cur.swap(next);
  }

  sol.grid.times = Eigen::Map<const Eigen::VectorXd>(stored_times.data(), stored_times.size());
  sol.grid.values.resize(ns, frames.size());
  for (std::size_t n = 0; n < frames.size(); ++n) sol.grid.values.col(n) = frames[n];
  return sol;
}

EnergyTrace energy_trace(const GridSolution& sol) {
  const SpaceTimeGrid& g = sol.grid;
  if (g.times.size() < 3) throw std::invalid_argument("energy_trace: need >= 3 stored levels");
  const Eigen::MatrixXd ut = time_derivative(g);
  const Eigen::VectorXd w = spatial_weights(g.axes);
  EnergyTrace tr;
  tr.times = g.times;
  tr.energy.resize(g.times.size());
  tr.mass.resize(g.times.size());
  for (Eigen::Index n = 0; n < g.times.size(); ++n) {
    const Eigen::VectorXd frame = g.values.col(n);
    Eigen::VectorXd density = ut.col(n).array().square();
    for (const auto& gi : spatial_gradient(g, frame)) density.array() += gi.array().square();
    tr.energy(n) = w.dot(density);
    tr.mass(n) = w.dot(frame.cwiseAbs2());
  }
  return tr;
}

double default_energy_constant(double T) { return 2.0 * std::exp(T) * (1.0 + T); }

EnergyInequalityReport check_energy_inequality(const GridSolution& sol, const WaveProblem& prob,
                                               double C_T) {
  const SpaceTimeGrid& g = sol.grid;
  const EnergyTrace tr = energy_trace(sol);
  const Eigen::MatrixXd ut = time_derivative(g);
  const Eigen::VectorXd wt = trapezoid_weights(g.times);
  const Eigen::VectorXd ws = spatial_weights(g.axes);
  const int d = g.dim();
  const Eigen::Index nx = g.axes[0].size();
  const Eigen::Index ny = d == 2 ? g.axes[1].size() : 1;

  // Boundary nodes with their surface weights (counting measure in 1D,
  // trapezoid along each edge in 2D; corners belong to two edges).
  std::vector<std::pair<Eigen::Index, double>> surface;
  if (d == 1) {
    surface = {{0, 1.0}, {nx - 1, 1.0}};
  } else {
    const Eigen::VectorXd wx = trapezoid_weights(g.axes[0]);
    const Eigen::VectorXd wy = trapezoid_weights(g.axes[1]);
    for (Eigen::Index i = 0; i < nx; ++i) {
      surface.emplace_back(i, wx(i));
      surface.emplace_back((ny - 1) * nx + i, wx(i));
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
      surface.emplace_back(j * nx, wy(j));
      surface.emplace_back(j * nx + nx - 1, wy(j));
    }
  }

  EnergyInequalityReport rep;
  for (Eigen::Index n = 0; n < g.times.size(); ++n) {
    const Eigen::VectorXd frame = g.values.col(n);
    const auto grad = spatial_gradient(g, frame);
    double flux = 0.0;
    for (const auto& [s, w] : surface) {
      double gn2 = 0.0;
      for (const auto& gi : grad) gn2 += gi(s) * gi(s);
      flux += w * std::abs(ut(s, n)) * std::sqrt(gn2);
    }
    double f2 = 0.0;
    for (Eigen::Index s = 0; s < ws.size(); ++s) {
      const double fv = prob.source(g.node(s), g.times(n));
      f2 += ws(s) * fv * fv;
    }
    rep.flux_term += wt(n) * flux;
    rep.source_term += wt(n) * f2;
    rep.lhs = std::max(rep.lhs, tr.energy(n) + tr.mass(n));
  }
  rep.flux_term *= 2.0;
  rep.rhs = C_T * (tr.energy(0) + tr.mass(0) + rep.source_term + rep.flux_term);
  rep.satisfied = rep.lhs <= rep.rhs;
  return rep;
}

void write_grid_binary(const std::filesystem::path& stem, const GridSolution& sol) {
  const SpaceTimeGrid& g = sol.grid;
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["dx"] = sol.dx;
  meta["dy"] = sol.dy;
  meta["dt"] = sol.dt;
  meta["store_every"] = sol.store_every;
  std::vector<Eigen::Index> shape = {g.times.size()};
  for (int i = g.dim() - 1; i >= 0; --i) shape.push_back(g.axes[i].size());
  meta["shape"] = shape;
  meta["layout"] = "float64 little-endian, level-major, x fastest";
  meta["lo"] = std::vector<double>(sol.domain.lo.data(), sol.domain.lo.data() + sol.domain.dim());
  meta["hi"] = std::vector<double>(sol.domain.hi.data(), sol.domain.hi.data() + sol.domain.dim());
  meta["T"] = sol.domain.T;
  meta["times"] = std::vector<double>(g.times.data(), g.times.data() + g.times.size());

  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  for (Eigen::Index n = 0; n < g.values.cols(); ++n)
    for (Eigen::Index s = 0; s < g.values.rows(); ++s) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(g.values(s, n));
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
      out.write(bytes, 8);
    }
  std::ofstream js(side, std::ios::trunc);
  js << meta.dump(2) << '\n';
}

GridSolution read_grid_binary(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path side = stem;
  side += ".json";
  std::ifstream js(side);
  if (!js) throw std::runtime_error("cannot read " + side.string());
  const auto meta = nlohmann::json::parse(js);
  GridSolution sol;
  const auto lo = meta.at("lo").get<std::vector<double>>();
  const auto hi = meta.at("hi").get<std::vector<double>>();
  sol.domain = Box(Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size()),
                   Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size()), meta.at("T").get<double>());
  sol.dx = meta.at("dx");
  sol.dy = meta.at("dy");
  sol.dt = meta.at("dt");
  sol.store_every = meta.at("store_every");
  const auto shape = meta.at("shape").get<std::vector<Eigen::Index>>();
  const auto times = meta.at("times").get<std::vector<double>>();
  const int d = static_cast<int>(shape.size()) - 1;
  for (int i = 0; i < d; ++i)
    sol.grid.axes.push_back(
        Eigen::VectorXd::LinSpaced(shape[d - i], sol.domain.lo(i), sol.domain.hi(i)));
  sol.grid.times = Eigen::Map<const Eigen::VectorXd>(times.data(), times.size());
  sol.grid.values.resize(sol.grid.n_spatial(), shape[0]);
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + bin.string());
  for (Eigen::Index n = 0; n < sol.grid.values.cols(); ++n)
    for (Eigen::Index s = 0; s < sol.grid.values.rows(); ++s) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("grid: truncated");
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
      sol.grid.values(s, n) = std::bit_cast<double>(bits);
    }
  return sol;
}

void write_frame_csv(const std::filesystem::path& path, const SpaceTimeGrid& g, Eigen::Index level) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (g.dim() == 1 ? "x,u\n" : "x,y,u\n");
  out.precision(17);
  for (Eigen::Index s = 0; s < g.values.rows(); ++s) {
    const Vec x = g.node(s);
    for (int i = 0; i < g.dim(); ++i) out << x(i) << ',';
    out << g.values(s, level) << '\n';
  }
}

void write_energy_csv(const std::filesystem::path& path, const EnergyTrace& tr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,energy,mass\n";
  out.precision(17);
  for (Eigen::Index n = 0; n < tr.times.size(); ++n)
    out << tr.times(n) << ',' << tr.energy(n) << ',' << tr.mass(n) << '\n';
}

Eigen::MatrixXd frame_2d(const SpaceTimeGrid& g, Eigen::Index level) {
  if (g.dim() != 2) throw std::invalid_argument("frame_2d: grid is not 2D");
  const Eigen::Index nx = g.axes[0].size(), ny = g.axes[1].size();
  Eigen::MatrixXd f(ny, nx);
  for (Eigen::Index j = 0; j < ny; ++j)
    for (Eigen::Index i = 0; i < nx; ++i) f(j, i) = g.values(j * nx + i, level);
  return f;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& field, double lo,
               double hi) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << field.cols() << ' ' << field.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  // Top row of the image is the largest y.
  for (Eigen::Index r = field.rows() - 1; r >= 0; --r)
    for (Eigen::Index c = 0; c < field.cols(); ++c) {
      const double v = std::clamp((field(r, c) - lo) / span, 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

}  // namespace spinnwave
