#include "kruzkov/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kruzkov/errors.hpp"
#include "random.hpp"
#include "rk4.hpp"

namespace kruzkov {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

bool Box::contains(std::span<const double> x, double slack) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  }
  return true;
}

double Box::diameter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

State Box::center() const {
  State c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

// ---------------------------------------------------------------------------
// ControlSet

ControlSet::ControlSet(Control lo, Control hi, std::vector<std::size_t> counts)
    : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(counts)) {
  if (lo_.size() != hi_.size() || lo_.size() != counts_.size()) {
    throw ConfigError("control set: bounds and sample counts must have equal length");
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || lo_[i] > hi_[i]) {
      throw ConfigError("control set: bounds must be finite with lo <= hi");
    }
    if (counts_[i] < 1) throw ConfigError("control set: at least one sample per axis");
  }
}

double ControlSet::spacing(std::size_t axis) const {
  return counts_[axis] > 1 ? (hi_[axis] - lo_[axis]) / static_cast<double>(counts_[axis] - 1)
                           : 0.0;
}

bool ControlSet::contains(std::span<const double> a, double slack) const {
  if (a.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < lo_[i] - slack || a[i] > hi_[i] + slack) return false;
  }
  return true;
}

Control ControlSet::clamp(std::span<const double> a) const {
  Control out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo_[i], hi_[i]);
  return out;
}

std::size_t ControlSet::sample_count() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

std::vector<Control> ControlSet::samples() const {
  const std::size_t total = sample_count();
  std::vector<Control> out;
  out.reserve(total);
  std::vector<std::size_t> idx(dims(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    Control a(dims());
    for (std::size_t i = 0; i < dims(); ++i) {
      a[i] = counts_[i] == 1 ? 0.5 * (lo_[i] + hi_[i])
                             : (idx[i] + 1 == counts_[i]
                                    ? hi_[i]
                                    : lo_[i] + spacing(i) * static_cast<double>(idx[i]));
    }
    out.push_back(std::move(a));
    // Last axis varies fastest.
    for (std::size_t i = dims(); i-- > 0;) {
      if (++idx[i] < counts_[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

ControlSet ControlSet::resampled(std::vector<std::size_t> counts) const {
  return ControlSet(lo_, hi_, std::move(counts));
}

// ---------------------------------------------------------------------------
// Dynamics / CostFunction

Dynamics::Dynamics(std::size_t state_dim, std::size_t control_dim, Fn fn)
    : n_(state_dim), m_(control_dim), fn_(std::move(fn)) {
  if (n_ == 0) throw ConfigError("dynamics: state dimension must be positive");
  if (!fn_) throw ConfigError("dynamics: empty evaluator");
}

State Dynamics::velocity(std::span<const double> x, std::span<const double> a) const {
  State dx(n_);
  fn_(x, a, dx);
  return dx;
}

namespace {

State sample_box(detail::Rng& rng, const Box& box) {
  State x(box.dims());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

}  // namespace

std::optional<State> Dynamics::linear_growth_violation(const Box& box, const ControlSet& controls,
                                                       double M, std::size_t samples,
                                                       std::uint64_t seed) const {
  detail::Rng rng(seed);
  const auto as = controls.samples();
  State dx(n_);
  for (std::size_t s = 0; s < samples; ++s) {
    const State x = sample_box(rng, box);
    for (const auto& a : as) {
      fn_(x, a, dx);
      if (!(norm(dx) <= M * (1.0 + norm(x)))) return x;
    }
  }
  return std::nullopt;
}

CostFunction::CostFunction(std::size_t state_dim, std::size_t control_dim, Fn fn)
    : n_(state_dim), m_(control_dim), fn_(std::move(fn)) {
  if (!fn_) throw ConfigError("cost function: empty evaluator");
}

std::optional<State> CostFunction::negativity_violation(const Box& box, const ControlSet& controls,
                                                        std::size_t samples,
                                                        std::uint64_t seed) const {
  detail::Rng rng(seed);
  const auto as = controls.samples();
  for (std::size_t s = 0; s < samples; ++s) {
    const State x = sample_box(rng, box);
    for (const auto& a : as) {
      if (!(fn_(x, a) >= 0.0)) return x;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// TargetSet

TargetSet TargetSet::point(State center) {
  TargetSet t;
  t.kind_ = Kind::Point;
  t.dims_ = center.size();
  t.anchor_ = center;
  t.a_ = std::move(center);
  return t;
}

TargetSet TargetSet::ball(State center, double radius) {
  if (!(radius >= 0.0)) throw ConfigError("ball target: radius must be nonnegative");
  TargetSet t = point(std::move(center));
  t.kind_ = Kind::Ball;
  t.radius_ = radius;
  return t;
}

TargetSet TargetSet::box(State lo, State hi) {
  if (lo.size() != hi.size()) throw ConfigError("box target: bound dimensions differ");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) throw ConfigError("box target: lo > hi");
  }
  TargetSet t;
  t.kind_ = Kind::Box;
  t.dims_ = lo.size();
  State c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  t.anchor_ = std::move(c);
  t.a_ = std::move(lo);
  t.b_ = std::move(hi);
  return t;
}

TargetSet TargetSet::custom(std::size_t dims, DistanceFn distance, std::optional<State> anchor) {
  if (!distance) throw ConfigError("custom target: empty distance evaluator");
  TargetSet t;
  t.kind_ = Kind::Custom;
  t.dims_ = dims;
  t.custom_ = std::move(distance);
  t.anchor_ = std::move(anchor);
  return t;
}

double TargetSet::distance(std::span<const double> x) const {
  switch (kind_) {
    case Kind::Point: {
      double s = 0.0;
      for (std::size_t i = 0; i < dims_; ++i) s += (x[i] - a_[i]) * (x[i] - a_[i]);
      return std::sqrt(s);
    }
    case Kind::Ball: {
      double s = 0.0;
      for (std::size_t i = 0; i < dims_; ++i) s += (x[i] - a_[i]) * (x[i] - a_[i]);
      return std::max(0.0, std::sqrt(s) - radius_);
    }
    case Kind::Box: {
      double s = 0.0;
      for (std::size_t i = 0; i < dims_; ++i) {
        const double e = std::max({a_[i] - x[i], 0.0, x[i] - b_[i]});
        s += e * e;
      }
      return std::sqrt(s);
    }
    case Kind::Custom:
      return custom_(x);
  }
  return 0.0;
}

bool TargetSet::has_interior_at_scale(double r) const {
  switch (kind_) {
    case Kind::Point:
      return false;
    case Kind::Ball:
      return radius_ >= r;
    case Kind::Box:
      for (std::size_t i = 0; i < dims_; ++i) {
        if (b_[i] - a_[i] < r) return false;
      }
      return true;
    case Kind::Custom:
      return false;
  }
  return false;
}

std::optional<State> TargetSet::point_at_distance(std::span<const double> dir, double r) const {
  if (!anchor_) return std::nullopt;
  const State& c = *anchor_;
  auto at = [&](double t) {
    State y(dims_);
    for (std::size_t i = 0; i < dims_; ++i) y[i] = c[i] + t * dir[i];
    return y;
  };
  if (kind_ == Kind::Point) return at(r);
  if (kind_ == Kind::Ball) return at(radius_ + r);
  // d(anchor + t dir) is nondecreasing in t for convex targets; bisect.
  double hi = r + 1.0;
  while (distance(at(hi)) < r) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (distance(at(mid)) < r ? lo : hi) = mid;
  }
  return at(hi);
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(std::string name_, Dynamics dynamics_, CostFunction running_cost_,
                 ControlSet controls_, TargetSet target_, std::optional<CostFunction> penalty_,
                 std::optional<Box> domain_)
    : name(std::move(name_)),
      dynamics(std::move(dynamics_)),
      running_cost(std::move(running_cost_)),
      controls(std::move(controls_)),
      target(std::move(target_)),
      penalty(std::move(penalty_)),
      domain(std::move(domain_)) {
  validate();
}

void Problem::validate() const {
  const std::size_t n = dynamics.state_dim();
  const std::size_t m = dynamics.control_dim();
  auto bad = [&](const std::string& what) {
    throw ConfigError("problem '" + name + "': " + what);
  };
  if (running_cost.state_dim() != n || running_cost.control_dim() != m) {
    bad("running cost dimensions differ from dynamics");
  }
  if (penalty && (penalty->state_dim() != n || penalty->control_dim() != m)) {
    bad("penalty dimensions differ from dynamics");
  }
  if (controls.dims() != m) bad("control set dimension differs from dynamics");
  if (target.dims() != n) bad("target dimension differs from dynamics");
  if (domain && (domain->lo.size() != n || domain->hi.size() != n)) {
    bad("domain box dimension differs from dynamics");
  }
}

double Problem::stage_cost(std::span<const double> x, std::span<const double> a,
                           double eps) const {
  double c = running_cost(x, a);
  if (eps != 0.0 && penalty) c += eps * (*penalty)(x, a);
  return c;
}

double Problem::safety_radius() const {
  if (!domain) return 1e6;
  return 10.0 * domain->diameter() + norm(domain->center());
}

double distance(const Problem& p, std::span<const double> x) { return p.target.distance(x); }

// ---------------------------------------------------------------------------
// ControlSchedule

ControlSchedule::ControlSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (const auto& s : segments_) {
    if (!(s.duration >= 0.0)) throw ConfigError("control schedule: negative segment duration");
  }
}

ControlSchedule ControlSchedule::constant(Control a) {
  return ControlSchedule({Segment{std::numeric_limits<double>::infinity(), std::move(a)}});
}

std::size_t ControlSchedule::index_at(double t) const {
  double end = 0.0;
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
    end += segments_[i].duration;
    // Grid times are k*dt; tolerate rounding at the switch instant.
    if (t < end - 1e-12 * std::max(1.0, end)) return i;
  }
  return segments_.size() - 1;
}

const Control& ControlSchedule::at(double t) const {
  if (segments_.empty()) throw ConfigError("control schedule is empty");
  return segments_[index_at(t)].control;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

void check_args(const Problem& p, std::span<const double> x, double dt) {
  if (!(dt > 0.0)) throw ConfigError("integration step dt must be positive");
  if (x.size() != p.state_dim()) throw ConfigError("state dimension mismatch");
  for (double c : x) {
    if (!std::isfinite(c)) throw DomainError("initial state must be finite");
  }
}

template <class Recorder>
RolloutResult run(const Problem& p, std::span<const double> x, const ControlSchedule& policy,
                  double dt, double horizon, double stop_radius, double eps, double cost_cap,
                  Recorder&& record) {
  check_args(p, x, dt);
  if (!(horizon >= dt * (1.0 - 1e-12))) throw ConfigError("simulate: horizon must be >= dt");
  if (!(stop_radius >= 0.0)) throw ConfigError("simulate: stop_radius must be nonnegative");
  if (policy.empty()) throw ConfigError("simulate: empty control schedule");

  const std::size_t n = p.state_dim();
  const double safety = p.safety_radius();
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));

  detail::Workspace w(n);
  State y(x.begin(), x.end());
  RolloutResult out;

  if (p.target.distance(y) <= stop_radius) {
    record(0.0, y, nullptr, 0.0);
    out.exit_time = 0.0;
    return out;
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Control& a = policy.at(t);
    const double l0 = p.stage_cost(y, a, eps);
    record(t, y, &a, out.cost);
    detail::rk4_inplace(p.dynamics, y, a, dt, w);
    if (norm(y) > safety) {
      throw DivergenceError("trajectory left the safety box", y);
    }
    const double l1 = p.stage_cost(y, a, eps);
    out.cost += 0.5 * dt * (l0 + l1);
    const double t1 = static_cast<double>(k + 1) * dt;
    if (p.target.distance(y) <= stop_radius) {
      record(t1, y, nullptr, out.cost);
      out.exit_time = t1;
      return out;
    }
    if (out.cost > cost_cap) {
      out.capped = true;
      return out;
    }
    if (k + 1 == steps) record(t1, y, nullptr, out.cost);
  }
  return out;
}

}  // namespace

State integrate_step(const Problem& p, std::span<const double> x, std::span<const double> a,
                     double dt) {
  check_args(p, x, dt);
  detail::Workspace w(p.state_dim());
  State y(x.begin(), x.end());
  detail::rk4_inplace(p.dynamics, y, a, dt, w);
  return y;
}

Trajectory simulate(const Problem& p, std::span<const double> x, const ControlSchedule& policy,
                    double dt, double horizon, double stop_radius, double eps) {
  Trajectory traj;
  traj.dt = dt;
  const auto res = run(p, x, policy, dt, horizon, stop_radius, eps,
                       std::numeric_limits<double>::infinity(),
                       [&](double t, const State& y, const Control* a, double cost) {
                         traj.points.push_back(
                             TrajectoryPoint{t, y, a ? *a : Control{}, cost});
                       });
  traj.exit_time = res.exit_time;
  return traj;
}

RolloutResult rollout(const Problem& p, std::span<const double> x, const ControlSchedule& policy,
                      double dt, double horizon, double stop_radius, double eps,
                      double cost_cap) {
  return run(p, x, policy, dt, horizon, stop_radius, eps, cost_cap,
             [](double, const State&, const Control*, double) {});
}

}  // namespace kruzkov
