#pragma once

// Built-in problems with known reference values.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kruzkov/grid.hpp"
#include "kruzkov/problem.hpp"
#include "kruzkov/solver.hpp"
#include "kruzkov/verifiers.hpp"

namespace kruzkov {

/// A reference value function: a formula, the +inf marker (0 on T, +inf
/// elsewhere) or unknown.
struct Reference {
  enum class Kind { Unknown, Formula, Infinite };

  Kind kind = Kind::Unknown;
  std::string text;
  std::function<double(std::span<const double>)> fn;
  /// Where the formula comes from and where it is valid.
  std::string note;

  bool known() const { return kind != Kind::Unknown; }
  /// Throws LookupError for an unknown reference.
  double operator()(std::span<const double> x) const;
};

struct MrfReference {
  std::string text;
  StateFunction U;
  /// Open interval of admissible k.
  double k_lo = 0.0;
  double k_hi = 1.0;
  /// Only U <= sigma is claimed.
  double sigma = std::numeric_limits<double>::infinity();
  /// Inequality for l + rho rather than l.
  bool penalized = false;

  double k_mid() const { return 0.5 * (k_lo + k_hi); }
};

struct OracleFixture {
  State x;
  /// estimate_Vm with the fixture's oracle settings.
  double value;
  std::size_t switches;
};

struct ExampleEntry {
  std::string name{};
  std::string summary{};
  /// DSL text of the data, for display.
  std::vector<std::string> f_text{};
  std::string l_text{};
  std::string rho_text{};
  Problem problem;
  Grid grid;
  SolverConfig solver{};

  Reference V{};
  Reference Vf{};
  Reference Vm{};
  /// Reference for the eps-penalized value, when known.
  std::function<double(std::span<const double>, double)> V_eps{};
  std::string V_eps_text{};

  std::vector<MrfReference> mrf{};
  /// Conditions that hold, with the auxiliary functions needed to check them.
  std::vector<Condition> conditions{};
  std::string sc1_U{};
  std::string sc1_m{};
  std::string sc2_c2{};

  std::vector<OracleFixture> fixtures{};
  std::vector<std::string> notes{};

  bool holds(Condition c) const;
};

namespace examples {

/// Throws LookupError listing the available names.
const ExampleEntry& get(std::string_view name);
const std::vector<std::string>& names();

}  // namespace examples

}  // namespace kruzkov
