#pragma once

// Problem loading for the command-line tool: built-in examples, inline JSON
// problems and JSON config files.
//
// Inline schema:
//   {"name": "...", "n": 1, "m": 1, "f": ["-x1*a1"], "l": "abs(x1)", "rho": "abs(x1)",
//    "A": {"lo": [0], "hi": [1], "samples": [21]},
//    "target": {"type": "point" | "ball" | "box", "params": {...}},
//    "domain": {"lo": [...], "hi": [...]},
//    "grid": {"lo": [...], "hi": [...], "h": 0.01},
//    "solver": {"dt": 0, "tol": 1e-6, "delta_target": 0.02, "init": "above", ...}}
// A config file may instead name a built-in problem with "example".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kruzkov/errors.hpp"
#include "kruzkov/examples.hpp"
#include "kruzkov/grid.hpp"
#include "kruzkov/problem.hpp"
#include "kruzkov/solver.hpp"

namespace kruzkov::cli {

/// Malformed command line or configuration; exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct ProblemSource {
  std::optional<std::string> example;
  std::optional<std::string> inline_json;
  std::optional<std::string> config_path;
};

struct RunConfig {
  std::string name;
  std::optional<Problem> problem;
  std::optional<Grid> grid;
  SolverConfig solver;
  /// Set for built-in problems.
  const ExampleEntry* example = nullptr;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  unsigned threads = 1;

  const Problem& prob() const { return *problem; }
  /// Grid from the config, else the problem's domain with spacing h.
  Grid grid_or_default(double h = 0.0) const;
};

/// Problem from the inline schema. Throws UsageError.
Problem problem_from_json(const nlohmann::json& j);

/// Applies a "solver" block on top of `cfg`.
void apply_solver_json(const nlohmann::json& j, SolverConfig& cfg);

/// Applies a "grid" block.
Grid grid_from_json(const nlohmann::json& j);

/// Exactly one source must be set. Throws UsageError.
RunConfig load_run_config(const ProblemSource& src);

}  // namespace kruzkov::cli
