#pragma once

// Brute-force value estimates by search over piecewise-constant control
// schedules. Every estimate is the cost of an explicit schedule, hence an
// upper bound of the corresponding value (up to the admissibility radius).
//
// All estimators share one search: constant controls exhaustively, then
// coordinate descent over K-switch schedules. The search does not depend on
// which value is requested, so on identical configurations
//
//   estimate_Vm <= estimate_V <= estimate_VT(T),   estimate_Veps nondecreasing in eps
//
// hold exactly.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kruzkov/problem.hpp"

namespace kruzkov {

struct OracleConfig {
  double horizon = 20.0;
  /// Number of control switches K (K + 1 segments).
  std::size_t switches = 0;
  /// Per-axis control samples; empty uses the problem's A_h.
  std::vector<std::size_t> control_samples;
  double dt = 0.01;
  /// Entry into T_{delta_adm} counts as reaching the target.
  double delta_adm = 0.05;
  std::size_t restarts = 2;
  /// Coordinate-descent passes per start.
  std::size_t refine_rounds = 4;
  std::uint64_t seed = 1;

  /// Throws ConfigError on T/dt < K + 1 or delta_adm <= 0.
  void validate() const;
};

struct OracleEstimate {
  /// +inf when no admissible schedule was found.
  double value = std::numeric_limits<double>::infinity();
  ControlSchedule schedule;
  /// The best trajectory entered T_{delta_adm}.
  bool admissible = false;
  std::optional<double> exit_time;
  /// Number of rollouts performed by the search.
  std::size_t evaluations = 0;
};

OracleEstimate estimate_V(const Problem& p, std::span<const double> x, const OracleConfig& cfg);

/// Without the admissibility restriction; cost runs to the horizon or the
/// entry time, whichever is first.
OracleEstimate estimate_Vm(const Problem& p, std::span<const double> x, const OracleConfig& cfg);

/// Running cost l + eps * rho. Throws ConfigError if the problem has no rho.
OracleEstimate estimate_Veps(const Problem& p, std::span<const double> x, double eps,
                             const OracleConfig& cfg);

/// Admissibility requires entry within T_max <= cfg.horizon.
OracleEstimate estimate_VT(const Problem& p, std::span<const double> x, double T_max,
                           const OracleConfig& cfg);

}  // namespace kruzkov
