#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "spinnwave/grid.hpp"
#include "spinnwave/problem.hpp"

namespace spinnwave {

inline constexpr double kCflSafety = 0.95;

class CflViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FdmMesh {
  double dx = 0.01;
  double dy = 0.0;  // 2D only; 0 means dx
  double dt = 0.009;
  int store_every = 1;
};

/// Leapfrog reference solution. `grid.values` holds stored time levels.
struct GridSolution {
  Box domain;
  double dx = 0.0;
  double dy = 0.0;
  double dt = 0.0;  // effective step: T / ceil(T / requested dt)
  int store_every = 1;
  SpaceTimeGrid grid;
};

/// Largest stable step for the mesh under the safety factor.
double cfl_limit(int d, double dx, double dy);

/// Second-order central differences in space and time (3-point stencil in
/// 1D, 5-point in 2D). The first step uses the Taylor start
/// u^1 = u^0 + dt psi + dt^2/2 (Lap_h u^0 + f); Dirichlet nodes take g at
/// every level. Throws CflViolation or std::invalid_argument for a mesh that
/// does not divide the box.
GridSolution solve_fdm(const WaveProblem& prob, const FdmMesh& mesh);

struct EnergyTrace {
  Eigen::VectorXd times;
  Eigen::VectorXd energy;   // E(t) = int u_t^2 + |grad u|^2
  Eigen::VectorXd mass;     // E_0(t) = int u^2
};

/// Trapezoid-rule energies at every stored level; derivatives by centred
/// differences, one-sided second order at the ends.
EnergyTrace energy_trace(const GridSolution& sol);

struct EnergyInequalityReport {
  double lhs = 0.0;  // max_t E(t) + E_0(t)
  double rhs = 0.0;  // C_T (E(0) + E_0(0) + int f^2 + 2 int int |u_t| |grad u| ds dt)
  double source_term = 0.0;
  double flux_term = 0.0;
  bool satisfied = false;
};

/// 2 e^T (1 + T), from following the Gronwall steps of the energy estimate.
/// A heuristic, since the estimate only asserts existence of C(T).
double default_energy_constant(double T);

EnergyInequalityReport check_energy_inequality(const GridSolution& sol, const WaveProblem& prob,
                                               double C_T);

/// Binary frames (float64 LE, level-major, x fastest) plus a JSON sidecar
/// `<stem>.json` with dx, dy, dt and shape.
void write_grid_binary(const std::filesystem::path& stem, const GridSolution& sol);
GridSolution read_grid_binary(const std::filesystem::path& stem);

/// One CSV per stored level: columns x[,y],u.
void write_frame_csv(const std::filesystem::path& path, const SpaceTimeGrid& grid, Eigen::Index level);

void write_energy_csv(const std::filesystem::path& path, const EnergyTrace& trace);

/// 8-bit binary PGM of a 2D field (rows = y, columns = x), linearly mapped
/// from [lo, hi] to [0, 255].
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& field, double lo,
               double hi);

/// Level `n` of a 2D grid as an ny x nx matrix.
Eigen::MatrixXd frame_2d(const SpaceTimeGrid& grid, Eigen::Index level);

}  // namespace spinnwave
