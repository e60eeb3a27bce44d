#pragma once

// Sampling-based falsifiers for the structural conditions used by the
// uniqueness and approximation results: the minimum-restraint inequality,
// Lyapunov decrease (SC1), cost growth (SC2), convexity of the augmented
// velocity set (CV), the integral conditions CFF/CFT and target viability.
//
// A "pass" verdict means that no counterexample was found at the configured
// number of samples.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kruzkov/expr.hpp"
#include "kruzkov/problem.hpp"

namespace kruzkov {

enum class Condition { SC1, SC2, CV, CFF, CFT, Viability, MRF, LACL };
enum class Verdict { Pass, Fail, Inconclusive };

const char* to_string(Condition c);
const char* to_string(Verdict v);

struct Counterexample {
  State x;
  Control a;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Extra evidence: the offending gradient (MRF) or midpoint (CV).
  std::vector<double> witness;
};

struct CheckReport {
  Condition condition = Condition::MRF;
  Verdict verdict = Verdict::Inconclusive;
  /// Worst violations first.
  std::vector<Counterexample> counterexamples;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  /// Smallest slack seen over all tested inequalities (negative on failure).
  double margin_min = 0.0;
  std::vector<std::string> notes;

  bool passed() const { return verdict == Verdict::Pass; }
  /// {condition, verdict, samples, seed, counterexamples: [{x, a, lhs, rhs}], margin_min}
  std::string to_json() const;
};

using StateFunction = std::function<double(std::span<const double>)>;
using LevelFunction = std::function<double(double)>;

/// Wraps an x-expression (over x1..xn only) as a StateFunction.
StateFunction state_function(const Expr& e);
/// Wraps an s-expression as a LevelFunction.
LevelFunction level_function(const Expr& e);

struct ConditionSpec {
  Condition which = Condition::MRF;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  /// Sampling region Omega; defaults to the problem's domain box.
  std::optional<Box> region;
  /// Samples with d(x) <= exclusion_radius are skipped (besides T itself).
  double exclusion_radius = 0.0;
  /// Central-difference step for gradients.
  double gradient_step = 1e-4;
  /// MRF: require min_a {...} < -margin_floor.
  double margin_floor = 1e-12;
  /// SC1/SC2 inequality tolerance.
  double tolerance = 1e-9;
  /// CV: absolute midpoint-distance tolerance added to the resolution term.
  double cv_tolerance = 1e-9;
  double viability_tolerance = 1e-6;
  double viability_dt = 0.01;
  std::size_t max_counterexamples = 16;

  // Auxiliary data used by run_condition().
  std::optional<Expr> U;
  std::optional<Expr> m;
  std::optional<Expr> c2;
  double k = 0.5;
  double sigma = std::numeric_limits<double>::infinity();
  /// Test the MRF inequality for l + rho instead of l.
  bool penalized = false;
};

struct MRFCandidate {
  StateFunction U{};
  double k = 0.5;
  /// Validity level: only samples with U(x) <= sigma are tested.
  double sigma = std::numeric_limits<double>::infinity();
  /// Omega; defaults to ConditionSpec::region, then the problem domain.
  std::optional<Box> omega{};
  double gradient_step = 1e-4;
  /// Lagrangian h = l + rho instead of l.
  bool penalized = false;
};

CheckReport check_mrf(const Problem& p, const MRFCandidate& cand, const ConditionSpec& spec);

/// sup_a <grad U(x), f(x,a)> <= -m(d(x)). Throws InvalidAuxiliaryError if
/// m(s) <= 0 at a sampled s > 0.
CheckReport check_sc1(const Problem& p, const StateFunction& U, const LevelFunction& m,
                      const ConditionSpec& spec);

/// l(x,a) >= c2(d(x)) on T^c x A_h. Throws InvalidAuxiliaryError if c2 is
/// nonpositive or decreasing on the sampled distances.
CheckReport check_sc2(const Problem& p, const LevelFunction& c2, const ConditionSpec& spec);

/// Midpoint test for convexity of {(f(x,a), gamma): gamma >= l(x,a)}, relative
/// to the control discretization.
CheckReport check_cv(const Problem& p, const ConditionSpec& spec);

/// T x {0} viability: every sampled x in T has a control with l(x,a) ~ 0
/// whose short constant-control trajectory stays in T.
CheckReport check_viability(const Problem& p, const ConditionSpec& spec);

enum class PowerLawVerdict { CFT, CFFOnly, Neither };
const char* to_string(PowerLawVerdict v);

/// Verdict for ghat(s) = C1 s^{beta1/gamma}, rhohat(s) = C2 s^{r beta2/gamma}.
PowerLawVerdict classify_cff_cft(double gamma, double beta1, double beta2, double r);

struct GHatOptions {
  /// m(s) of g = k l + m(U); defaults to half the measured MRF slack.
  std::optional<LevelFunction> m;
  /// Penalty rho; defaults to the problem's penalty.
  std::optional<CostFunction> rho;
  std::optional<Box> region;
  std::size_t samples = 6000;
  std::uint64_t seed = 1;
  double gradient_step = 1e-6;
  /// An integrand ~ s^e near 0 counts as integrable iff e > -1 + exponent_tol.
  double exponent_tol = 0.1;
  /// Number of smallest bands used for the power-law tail fit.
  std::size_t tail_bands = 6;
};

struct GHatEstimate {
  std::vector<double> s;
  std::vector<double> ghat;
  std::vector<double> rhohat;
  /// Bands with at least one sample.
  std::vector<bool> usable;
  std::size_t usable_bands = 0;
  /// Fitted ghat ~ s^ghat_exponent and rhohat/ghat ~ s^ratio_exponent.
  double ghat_exponent = 0.0;
  double ratio_exponent = 0.0;
  /// Quadratures of ds/ghat and rhohat/ghat over (0, sigma]; +inf if the
  /// fitted tail diverges.
  double int_inv_ghat = 0.0;
  double int_rho_over_ghat = 0.0;
  bool inv_ghat_converges = false;
  bool rho_over_ghat_converges = false;
  bool has_rho = false;
  Verdict status = Verdict::Inconclusive;
  /// Set when status is not Inconclusive.
  std::optional<PowerLawVerdict> verdict;
};

GHatEstimate estimate_ghat_rhohat(const Problem& p, const StateFunction& U, double k,
                                  double sigma, std::span<const double> s_grid,
                                  const GHatOptions& opts = {});

/// Dispatches on spec.which using the auxiliary expressions in `spec`.
/// Throws ConfigError when a required auxiliary expression is missing.
CheckReport run_condition(const Problem& p, const ConditionSpec& spec);

}  // namespace kruzkov
