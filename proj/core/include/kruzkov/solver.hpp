#pragma once

// Semi-Lagrangian fixed-point solver for the Kruzkov-transformed exit-time
// problem
//
//   W(x) = min_{a in A_h} [ (1 - e^{-lambda dt}) + e^{-lambda dt} I[W](x + dt f(x,a)) ],
//   lambda = l + eps * rho,   W = 0 on T_delta,
//
// where I is multilinear interpolation on a regular grid. Iterating from
// W = 1 yields the maximal solution (the exit-time value V through Psi);
// iterating from W = 0 yields the minimal one (the unconstrained value V^m).

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kruzkov/grid.hpp"
#include "kruzkov/problem.hpp"
#include "kruzkov/transform.hpp"

namespace kruzkov {

struct SolverConfig {
  /// Time step; 0 selects the CFL limit min_i h_i / max |f|.
  double dt = 0.0;
  /// Sup-norm stopping tolerance in W units.
  double tol = 1e-6;
  std::size_t max_sweeps = 200000;
  InitRegime init = InitRegime::FromAbove;
  double eps = 0.0;
  std::vector<double> eps_ladder = {1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.0};
  /// Radius of the fattened target T_delta on which W is pinned to 0.
  double delta_target = 0.0;
  double tol_dom = 1e-6;
  OutOfBox out_of_box = OutOfBox::One;
  unsigned threads = 1;
  /// Horizon of closed-loop synthesis.
  double synthesis_horizon = 50.0;
  /// Keep the per-sweep residual sequence in SweepStats.
  bool record_residuals = false;
};

struct SweepStats {
  std::size_t sweeps = 0;
  double residual = 0.0;
  /// Sweeps that moved a node against the regime direction.
  std::size_t violations = 0;
  bool converged = false;
  std::vector<double> residuals;
};

struct SolveResult {
  ValueTable table;
  SweepStats stats;
};

/// Largest |f(x,a)| over grid nodes and A_h.
double max_speed(const Problem& p, const Grid& g);

/// Effective time step: cfg.dt, or the CFL limit when cfg.dt == 0. Throws
/// ConfigError if cfg.dt violates min_i h_i / max|f|.
double effective_dt(const Problem& p, const Grid& g, const SolverConfig& cfg);

/// Validates grid/problem/config compatibility (CFL, target resolution,
/// penalty presence). Throws ConfigError.
void validate(const Problem& p, const Grid& g, const SolverConfig& cfg);

/// One Jacobi sweep; returns the updated table and the sup-norm change.
std::pair<ValueTable, double> sl_update(const Problem& p, const Grid& g, const ValueTable& W,
                                        const SolverConfig& cfg);

/// Fixed-point iteration from W = 1 (FromAbove) or W = 0 (FromBelow)
/// outside T_delta. A non-converged result has stats.converged == false.
SolveResult solve(const Problem& p, const Grid& g, const SolverConfig& cfg);

/// Same iteration from a caller-supplied table (warm start). The regime
/// still selects which direction is counted as a violation.
SolveResult solve_from(const Problem& p, const Grid& g, const SolverConfig& cfg,
                       const ValueTable& start);

struct LadderResult {
  std::vector<double> eps;
  std::vector<ValueTable> tables;
  std::vector<SweepStats> stats;

  const ValueTable& limit() const { return tables.back(); }
};

/// FromAbove solves along cfg.eps_ladder with warm starts. Throws
/// ConsistencyError if a table rises above its predecessor by more than tol.
LadderResult solve_eps_ladder(const Problem& p, const Grid& g, const SolverConfig& cfg);

struct GapResult {
  ValueTable above;
  ValueTable below;
  SweepStats above_stats;
  SweepStats below_stats;
  /// W_above - W_below per node.
  std::vector<double> gap;
  /// Sup of gap over nodes in both domains.
  double sup_gap = 0.0;
};

/// Solves both regimes and reports their difference. Throws OrderingError
/// when W_below > W_above somewhere beyond round-off.
GapResult nonuniqueness_gap(const Problem& p, const Grid& g, const SolverConfig& cfg);

/// Backward march of ceil(T/dt) sweeps from W = 1 outside T_delta.
ValueTable finite_time_value(const Problem& p, const Grid& g, double T,
                             const SolverConfig& cfg);

/// finite_time_value for an increasing list of horizons in one march.
std::vector<ValueTable> finite_time_values(const Problem& p, const Grid& g,
                                           std::span<const double> horizons,
                                           const SolverConfig& cfg);

struct FattenedResult {
  std::vector<double> deltas;
  std::vector<ValueTable> tables;
  /// Nodes where a smaller delta produced a smaller W by more than tol.
  std::size_t order_violations = 0;
};

/// FromAbove solves with target T_delta for each delta (strictly
/// decreasing, each at least one cell diagonal).
FattenedResult fattened_value(const Problem& p, const Grid& g, std::span<const double> deltas,
                              const SolverConfig& cfg);

/// Closed loop: at each step apply the minimizer of the update expression
/// at the current state. Throws SynthesisError if the state leaves the
/// domain of W.
Trajectory synthesize_feedback(const Problem& p, const ValueTable& W, std::span<const double> x,
                               const SolverConfig& cfg);

/// Minimal (FromBelow) solution, which equals the infinite-horizon value
/// when T x {0} is viable. `viability_basis` is recorded in the table meta.
SolveResult infinite_horizon_value(const Problem& p, const Grid& g, const SolverConfig& cfg,
                                   std::string viability_basis = "asserted by caller");

}  // namespace kruzkov
