#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace kruzkov::cli {

enum ExitStatus : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kSolverConfig = 3,
  kVerifyFailed = 4,
};

struct SolveOptions {
  bool dual = false;
  bool ladder = false;
  bool infinite = false;
  std::optional<double> horizon;
  /// Closed-loop trajectory from this state.
  std::optional<std::vector<double>> synthesize;
};

struct ConvergeOptions {
  std::string axis = "h";
  std::vector<double> values;
  std::vector<std::vector<double>> probes;
};

struct VerifyOptions {
  std::optional<std::string> mrf;
  double k = 0.5;
  std::optional<double> sigma;
  bool penalized = false;
  bool sc1 = false;
  std::optional<std::string> U;
  std::optional<std::string> m;
  std::optional<std::string> sc2;
  bool cv = false;
  bool viability = false;
  bool cff = false;
  bool cft = false;
  std::size_t samples = 2000;
};

struct OracleOptions {
  std::vector<std::vector<double>> points;
  std::size_t switches = 0;
  double horizon = 20.0;
  double dt = 0.01;
  double delta_adm = 0.05;
  std::size_t restarts = 2;
  double eps = 0.5;
};

int cmd_solve(const RunConfig& cfg, const SolveOptions& opt, std::ostream& out, std::ostream& err);
int cmd_converge(const RunConfig& cfg, const ConvergeOptions& opt, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& out,
               std::ostream& err);
int cmd_oracle(const RunConfig& cfg, const OracleOptions& opt, std::ostream& out,
               std::ostream& err);
int cmd_list_examples(std::ostream& out);

/// Full command line (argv[0] excluded) to exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1,0.5" -> {1, 0.5}. Throws UsageError.
std::vector<double> parse_point(const std::string& text);

}  // namespace kruzkov::cli
