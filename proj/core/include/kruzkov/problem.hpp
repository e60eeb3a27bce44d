#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kruzkov {

using State = std::vector<double>;
using Control = std::vector<double>;

double norm(std::span<const double> v);

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  State lo;
  State hi;

  std::size_t dims() const { return lo.size(); }
  bool contains(std::span<const double> x, double slack = 0.0) const;
  double diameter() const;
  State center() const;
};

/// Compact box of admissible controls together with its uniform
/// discretization A_h (Cartesian product of per-axis samples).
class ControlSet {
 public:
  ControlSet(Control lo, Control hi, std::vector<std::size_t> counts);

  std::size_t dims() const { return lo_.size(); }
  const Control& lo() const { return lo_; }
  const Control& hi() const { return hi_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  /// Spacing of the uniform samples along one axis (0 for a single sample).
  double spacing(std::size_t axis) const;
  bool contains(std::span<const double> a, double slack = 1e-12) const;
  Control clamp(std::span<const double> a) const;

  /// All points of A_h, row-major in the axis order.
  std::vector<Control> samples() const;
  std::size_t sample_count() const;
  /// Same box with a different per-axis sample count.
  ControlSet resampled(std::vector<std::size_t> counts) const;

 private:
  Control lo_;
  Control hi_;
  std::vector<std::size_t> counts_;
};

/// f(x, a): writes the velocity into `dx`.
class Dynamics {
 public:
  using Fn = std::function<void(std::span<const double> x, std::span<const double> a,
                                std::span<double> dx)>;

  Dynamics(std::size_t state_dim, std::size_t control_dim, Fn fn);

  std::size_t state_dim() const { return n_; }
  std::size_t control_dim() const { return m_; }
  void operator()(std::span<const double> x, std::span<const double> a,
                  std::span<double> dx) const {
    fn_(x, a, dx);
  }
  State velocity(std::span<const double> x, std::span<const double> a) const;

  /// Sampled check of |f(x,a)| <= M (1 + |x|) on `box` x A_h; returns the
  /// first offending state, if any.
  std::optional<State> linear_growth_violation(const Box& box, const ControlSet& controls,
                                               double M, std::size_t samples,
                                               std::uint64_t seed) const;

 private:
  std::size_t n_;
  std::size_t m_;
  Fn fn_;
};

/// Nonnegative stage function of (x, a). Used for the running cost l and the
/// penalty rho.
class CostFunction {
 public:
  using Fn = std::function<double(std::span<const double> x, std::span<const double> a)>;

  CostFunction(std::size_t state_dim, std::size_t control_dim, Fn fn);

  std::size_t state_dim() const { return n_; }
  std::size_t control_dim() const { return m_; }
  double operator()(std::span<const double> x, std::span<const double> a) const {
    return fn_(x, a);
  }
  /// Sampled check of the nonnegativity invariant.
  std::optional<State> negativity_violation(const Box& box, const ControlSet& controls,
                                            std::size_t samples, std::uint64_t seed) const;

 private:
  std::size_t n_;
  std::size_t m_;
  Fn fn_;
};

/// Closed target set T with its Euclidean distance function d.
class TargetSet {
 public:
  enum class Kind { Point, Ball, Box, Custom };
  using DistanceFn = std::function<double(std::span<const double>)>;

  static TargetSet point(State center);
  static TargetSet ball(State center, double radius);
  static TargetSet box(State lo, State hi);
  /// User target; `anchor`, when given, must be a point of T from which
  /// rays leave T exactly once (used for near-target sampling).
  static TargetSet custom(std::size_t dims, DistanceFn distance,
                          std::optional<State> anchor = std::nullopt);

  Kind kind() const { return kind_; }
  std::size_t dims() const { return dims_; }
  double distance(std::span<const double> x) const;
  bool contains(std::span<const double> x) const { return distance(x) <= 0.0; }
  /// Membership in the closed delta-neighbourhood T_delta.
  bool in_fattened(std::span<const double> x, double delta) const {
    return distance(x) <= delta;
  }
  /// True if T contains a ball of radius `r` (so a grid with cell diagonal r
  /// sees at least one node inside T without fattening).
  bool has_interior_at_scale(double r) const;
  const std::optional<State>& anchor() const { return anchor_; }
  const State& center() const { return a_; }
  double radius() const { return radius_; }
  const State& box_lo() const { return a_; }
  const State& box_hi() const { return b_; }

  /// Point at distance `r` from T along direction `dir` (unit) from the
  /// anchor; nullopt for custom targets without anchor.
  std::optional<State> point_at_distance(std::span<const double> dir, double r) const;

 private:
  Kind kind_ = Kind::Point;
  std::size_t dims_ = 0;
  State a_;
  State b_;
  double radius_ = 0.0;
  DistanceFn custom_;
  std::optional<State> anchor_;
};

/// Control problem data: dynamics, running cost, controls, target and an
/// optional penalty rho for the epsilon-penalized payoff.
struct Problem {
  Problem(std::string name, Dynamics dynamics, CostFunction running_cost, ControlSet controls,
          TargetSet target, std::optional<CostFunction> penalty = std::nullopt,
          std::optional<Box> domain = std::nullopt);

  std::string name;
  Dynamics dynamics;
  CostFunction running_cost;
  ControlSet controls;
  TargetSet target;
  std::optional<CostFunction> penalty;
  /// Computational box; the simulation safety radius is derived from it.
  std::optional<Box> domain;

  std::size_t state_dim() const { return dynamics.state_dim(); }
  std::size_t control_dim() const { return dynamics.control_dim(); }
  /// l(x,a) + eps * rho(x,a); rho is taken as 0 when absent.
  double stage_cost(std::span<const double> x, std::span<const double> a, double eps) const;
  /// |y| beyond this aborts a simulation (10x the domain diameter).
  double safety_radius() const;
  /// Throws ConfigError when component dimensions disagree.
  void validate() const;
};

double distance(const Problem& p, std::span<const double> x);

/// Piecewise-constant control signal. The last segment holds forever.
class ControlSchedule {
 public:
  struct Segment {
    double duration;
    Control control;
  };

  ControlSchedule() = default;
  explicit ControlSchedule(std::vector<Segment> segments);
  static ControlSchedule constant(Control a);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  const Control& at(double t) const;
  /// Segment index active at time t.
  std::size_t index_at(double t) const;

 private:
  std::vector<Segment> segments_;
};

struct TrajectoryPoint {
  double t;
  State x;
  /// Control applied on [t, t + dt); empty at the final point.
  Control a;
  double cost;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<TrajectoryPoint> points;
  /// Set when the trajectory entered the stop region.
  std::optional<double> exit_time;

  double cost() const { return points.empty() ? 0.0 : points.back().cost; }
  const State& final_state() const { return points.back().x; }
};

/// One classical RK4 step of y' = f(y, a) with the control frozen.
State integrate_step(const Problem& p, std::span<const double> x, std::span<const double> a,
                     double dt);

/// Integrates from x under `policy` on the uniform grid t_k = k dt until
/// d(y) <= stop_radius or t = horizon, accumulating the trapezoid rule on
/// l + eps * rho.
Trajectory simulate(const Problem& p, std::span<const double> x, const ControlSchedule& policy,
                    double dt, double horizon, double stop_radius, double eps = 0.0);

/// Cost-only variant of simulate used by search loops.
struct RolloutResult {
  double cost = 0.0;
  std::optional<double> exit_time;
  /// True when the rollout was cut short because cost exceeded `cost_cap`.
  bool capped = false;
};

RolloutResult rollout(const Problem& p, std::span<const double> x, const ControlSchedule& policy,
                      double dt, double horizon, double stop_radius, double eps = 0.0,
                      double cost_cap = std::numeric_limits<double>::infinity());

}  // namespace kruzkov
