#include "kruzkov/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "kruzkov/errors.hpp"

namespace kruzkov {

namespace {

constexpr std::size_t kOutside = std::numeric_limits<std::size_t>::max();
// Above this many (node, control) pairs the foot stencils are recomputed on
// every sweep instead of cached.
constexpr std::size_t kMaxCachedPairs = std::size_t{4} << 20;

// Nodes at distance exactly delta from T (delta = cell diagonal is the usual
// choice) must not flip in or out with the rounding of their coordinates.
double pin_radius(const Grid& g, const SolverConfig& cfg) {
  return cfg.delta_target + 1e-9 * g.cell_diagonal();
}

// The discrete Bellman operator for fixed (problem, grid, eps, delta, dt).
class SweepOperator {
 public:
  SweepOperator(const Problem& p, const Grid& g, const SolverConfig& cfg)
      : p_(p), g_(g), cfg_(cfg), controls_(p.controls.samples()) {
    validate(p, g, cfg);
    dt_ = effective_dt(p, g, cfg);
    const std::size_t n = g.dims();
    pinned_.assign(g.size(), 0);
    State x(n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.node(i, x);
      if (p.target.in_fattened(x, pin_radius(g, cfg))) {
        pinned_[i] = 1;
      } else {
        free_.push_back(i);
      }
    }
    cached_ = free_.size() * controls_.size() <= kMaxCachedPairs;
    if (cached_) {
      const std::size_t pairs = free_.size() * controls_.size();
      base_.resize(pairs);
      frac_.resize(pairs * n);
      cost_.resize(pairs);
      disc_.resize(pairs);
      for (std::size_t k = 0; k < free_.size(); ++k) {
        g.node(free_[k], x);
        for (std::size_t c = 0; c < controls_.size(); ++c) {
          const std::size_t e = k * controls_.size() + c;
          stencil(x, controls_[c], base_[e], std::span(&frac_[e * n], n), cost_[e], disc_[e]);
        }
      }
    }
  }

  double dt() const { return dt_; }
  bool pinned(std::size_t i) const { return pinned_[i] != 0; }
  const std::vector<Control>& controls() const { return controls_; }

  // Foot-point stencil and discount of one (state, control) pair.
  void stencil(std::span<const double> x, std::span<const double> a, std::size_t& base,
               std::span<double> frac, double& cost, double& disc) const {
    const std::size_t n = g_.dims();
    std::array<double, 3> v{};
    std::array<double, 3> foot{};
    p_.dynamics(x, a, std::span(v.data(), n));
    for (std::size_t d = 0; d < n; ++d) foot[d] = x[d] + dt_ * v[d];
    const double lambda = p_.stage_cost(x, a, cfg_.eps);
    cost = -std::expm1(-lambda * dt_);
    disc = std::exp(-lambda * dt_);
    if (!g_.locate(std::span(foot.data(), n), cfg_.out_of_box == OutOfBox::Extrapolate, base,
                   frac)) {
      base = kOutside;
    }
  }

  double candidate(std::span<const double> W, std::size_t base, std::span<const double> frac,
                   double cost, double disc) const {
    const double interp = base == kOutside ? 1.0 : g_.interpolate_cell(W, base, frac);
    return cost + disc * interp;
  }

  // out <- S(in); returns sup |out - in|.
  double apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (pinned_[i]) out[i] = 0.0;
    }
    const unsigned threads = std::max(1u, cfg_.threads);
    if (threads == 1 || free_.size() < 4096) return apply_range(in, out, 0, free_.size());
    std::vector<double> partial(threads, 0.0);
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (free_.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(free_.size(), t * chunk);
        const std::size_t hi = std::min(free_.size(), lo + chunk);
        pool.emplace_back([&, t, lo, hi] { partial[t] = apply_range(in, out, lo, hi); });
      }
    }
    double res = *std::max_element(partial.begin(), partial.end());
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (pinned_[i]) res = std::max(res, std::abs(in[i]));
    }
    return res;
  }

  // Minimizing control of the update expression at an arbitrary state.
  std::size_t argmin(std::span<const double> W, std::span<const double> x) const {
    const std::size_t n = g_.dims();
    std::array<double, 3> frac{};
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < controls_.size(); ++c) {
      std::size_t base = 0;
      double cost = 0.0;
      double disc = 0.0;
      stencil(x, controls_[c], base, std::span(frac.data(), n), cost, disc);
      const double v = candidate(W, base, std::span(frac.data(), n), cost, disc);
      if (v < best_value) {
        best_value = v;
        best = c;
      }
    }
    return best;
  }

 private:
  double apply_range(std::span<const double> in, std::span<double> out, std::size_t lo,
                     std::size_t hi) const {
    const std::size_t n = g_.dims();
    const std::size_t nc = controls_.size();
    double res = 0.0;
    State x(n);
    std::array<double, 3> frac{};
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = free_[k];
      double best = std::numeric_limits<double>::infinity();
      if (cached_) {
        for (std::size_t c = 0; c < nc; ++c) {
          const std::size_t e = k * nc + c;
          best = std::min(best, candidate(in, base_[e], std::span(&frac_[e * n], n), cost_[e],
                                          disc_[e]));
        }
      } else {
        g_.node(i, x);
        for (std::size_t c = 0; c < nc; ++c) {
          std::size_t base = 0;
          double cost = 0.0;
          double disc = 0.0;
          stencil(x, controls_[c], base, std::span(frac.data(), n), cost, disc);
          best = std::min(best, candidate(in, base, std::span(frac.data(), n), cost, disc));
        }
      }
      best = std::clamp(best, 0.0, 1.0);
      out[i] = best;
      res = std::max(res, std::abs(best - in[i]));
    }
    if (lo == 0 && hi == free_.size()) {
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (pinned_[i]) res = std::max(res, std::abs(in[i]));
      }
    }
    return res;
  }

  const Problem& p_;
  const Grid& g_;
  SolverConfig cfg_;
  std::vector<Control> controls_;
  double dt_ = 0.0;
  std::vector<std::uint8_t> pinned_;
  std::vector<std::size_t> free_;
  bool cached_ = false;
  std::vector<std::size_t> base_;
  std::vector<double> frac_;
  std::vector<double> cost_;
  std::vector<double> disc_;
};

TableMeta make_meta(const SolverConfig& cfg, double dt) {
  TableMeta meta;
  meta.delta_target = cfg.delta_target;
  meta.eps = cfg.eps;
  meta.init = cfg.init;
  meta.dt = dt;
  return meta;
}

std::vector<double> initial_values(const SweepOperator& op, std::size_t size, InitRegime init) {
  std::vector<double> W(size, init == InitRegime::FromAbove ? 1.0 : 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    if (op.pinned(i)) W[i] = 0.0;
  }
  return W;
}

SolveResult iterate(const SweepOperator& op, const Grid& g, const SolverConfig& cfg,
                    std::vector<double> W, double violation_tol) {
  std::vector<double> next(W.size(), 0.0);
  SweepStats stats;
  const bool above = cfg.init == InitRegime::FromAbove;
  while (stats.sweeps < cfg.max_sweeps) {
    const double res = op.apply(W, next);
    ++stats.sweeps;
    stats.residual = res;
    if (cfg.record_residuals) stats.residuals.push_back(res);
    bool violated = false;
    for (std::size_t i = 0; i < W.size() && !violated; ++i) {
      violated = above ? next[i] > W[i] + violation_tol : next[i] < W[i] - violation_tol;
    }
    if (violated) ++stats.violations;
    W.swap(next);
    if (res < cfg.tol) {
      stats.converged = true;
      break;
    }
  }
  return SolveResult{ValueTable(g, std::move(W), cfg.tol_dom, make_meta(cfg, op.dt())), stats};
}

}  // namespace

double max_speed(const Problem& p, const Grid& g) {
  const auto controls = p.controls.samples();
  State x(g.dims());
  State v(g.dims());
  double vmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    for (const auto& a : controls) {
      p.dynamics(x, a, v);
      vmax = std::max(vmax, norm(v));
    }
  }
  return vmax;
}

double effective_dt(const Problem& p, const Grid& g, const SolverConfig& cfg) {
  const double vmax = max_speed(p, g);
  if (!std::isfinite(vmax)) throw ConfigError("dynamics not finite on the grid");
  const double limit = vmax > 0.0 ? g.min_spacing() / vmax : g.min_spacing();
  if (cfg.dt == 0.0) return limit;
  if (!(cfg.dt > 0.0)) throw ConfigError("solver dt must be positive (or 0 for automatic)");
  if (cfg.dt > limit * (1.0 + 1e-9)) {
    std::ostringstream msg;
    msg << "CFL violation: dt = " << cfg.dt << " exceeds min h / max|f| = " << limit;
    throw ConfigError(msg.str());
  }
  return cfg.dt;
}

void validate(const Problem& p, const Grid& g, const SolverConfig& cfg) {
  if (g.dims() != p.state_dim()) throw ConfigError("grid dimension differs from problem");
  if (!(cfg.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (!(cfg.tol_dom > 0.0)) throw ConfigError("domain tolerance must be positive");
  if (!(cfg.delta_target >= 0.0)) throw ConfigError("delta_target must be nonnegative");
  if (!(cfg.eps >= 0.0)) throw ConfigError("eps must be nonnegative");
  if (cfg.eps > 0.0 && !p.penalty) {
    throw ConfigError("eps > 0 requires a penalty function rho");
  }
  const double diag = g.cell_diagonal();
  if (!p.target.has_interior_at_scale(diag) && cfg.delta_target < diag * (1.0 - 1e-9)) {
    std::ostringstream msg;
    msg << "target below grid resolution: delta_target = " << cfg.delta_target
        << " < cell diagonal " << diag;
    throw ConfigError(msg.str());
  }
}

std::pair<ValueTable, double> sl_update(const Problem& p, const Grid& g, const ValueTable& W,
                                        const SolverConfig& cfg) {
  const SweepOperator op(p, g, cfg);
  std::vector<double> out(g.size(), 0.0);
  const double res = op.apply(W.values(), out);
  return {ValueTable(g, std::move(out), cfg.tol_dom, make_meta(cfg, op.dt())), res};
}

SolveResult solve(const Problem& p, const Grid& g, const SolverConfig& cfg) {
  const SweepOperator op(p, g, cfg);
  return iterate(op, g, cfg, initial_values(op, g.size(), cfg.init), 1e-12);
}

SolveResult solve_from(const Problem& p, const Grid& g, const SolverConfig& cfg,
                       const ValueTable& start) {
  if (start.grid().size() != g.size()) throw ConfigError("warm start table differs from grid");
  const SweepOperator op(p, g, cfg);
  std::vector<double> W(start.values().begin(), start.values().end());
  for (std::size_t i = 0; i < W.size(); ++i) {
    if (op.pinned(i)) W[i] = 0.0;
  }
  // A warm start is a fixed point of a neighbouring operator only up to its
  // own stopping tolerance.
  return iterate(op, g, cfg, std::move(W), cfg.tol);
}

LadderResult solve_eps_ladder(const Problem& p, const Grid& g, const SolverConfig& cfg) {
  if (!p.penalty) throw ConfigError("epsilon ladder requires a penalty function rho");
  if (cfg.eps_ladder.empty()) throw ConfigError("epsilon ladder is empty");
  for (std::size_t k = 0; k < cfg.eps_ladder.size(); ++k) {
    if (!(cfg.eps_ladder[k] >= 0.0)) throw ConfigError("epsilon ladder entries must be >= 0");
    if (k > 0 && !(cfg.eps_ladder[k] < cfg.eps_ladder[k - 1])) {
      throw ConfigError("epsilon ladder must be strictly decreasing");
    }
  }
  LadderResult out;
  SolverConfig rung = cfg;
  rung.init = InitRegime::FromAbove;
  // One dt for every rung, so that tables are comparable node by node.
  rung.eps = cfg.eps_ladder.front();
  rung.dt = effective_dt(p, g, cfg);
  for (std::size_t k = 0; k < cfg.eps_ladder.size(); ++k) {
    rung.eps = cfg.eps_ladder[k];
    SolveResult r = k == 0 ? solve(p, g, rung) : solve_from(p, g, rung, out.tables.back());
    if (k > 0) {
      const auto prev = out.tables.back().values();
      const auto cur = r.table.values();
      for (std::size_t i = 0; i < cur.size(); ++i) {
        if (cur[i] > prev[i] + cfg.tol) {
          std::ostringstream msg;
          msg << "epsilon ladder not monotone at node " << i << ": W(eps=" << rung.eps
              << ") = " << cur[i] << " > W(eps=" << out.eps.back() << ") = " << prev[i];
          throw ConsistencyError(msg.str());
        }
      }
    }
    out.eps.push_back(rung.eps);
    out.stats.push_back(r.stats);
    out.tables.push_back(std::move(r.table));
  }
  return out;
}

GapResult nonuniqueness_gap(const Problem& p, const Grid& g, const SolverConfig& cfg) {
  SolverConfig c = cfg;
  c.init = InitRegime::FromAbove;
  SolveResult above = solve(p, g, c);
  c.init = InitRegime::FromBelow;
  SolveResult below = solve(p, g, c);
  std::vector<double> gap(g.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gap[i] = above.table[i] - below.table[i];
    if (gap[i] < -1e-9) {
      std::ostringstream msg;
      msg << "ordering violation at node " << i << ": W_below = " << below.table[i]
          << " > W_above = " << above.table[i];
      throw OrderingError(msg.str());
    }
    if (above.table.in_domain(i) && below.table.in_domain(i)) sup = std::max(sup, gap[i]);
  }
  return GapResult{std::move(above.table), std::move(below.table), above.stats, below.stats,
                   std::move(gap), sup};
}

std::vector<ValueTable> finite_time_values(const Problem& p, const Grid& g,
                                           std::span<const double> horizons,
                                           const SolverConfig& cfg) {
  SolverConfig c = cfg;
  c.init = InitRegime::FromAbove;
  const SweepOperator op(p, g, c);
  const double dt = op.dt();
  std::vector<double> W = initial_values(op, g.size(), InitRegime::FromAbove);
  std::vector<double> next(W.size(), 0.0);
  std::vector<ValueTable> out;
  std::size_t done = 0;
  double last = 0.0;
  for (double T : horizons) {
    if (!(T >= dt * (1.0 - 1e-12))) throw ConfigError("finite horizon must be >= dt");
    if (T < last) throw ConfigError("finite horizons must be nondecreasing");
    last = T;
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    for (; done < steps; ++done) {
      op.apply(W, next);
      W.swap(next);
    }
    TableMeta meta = make_meta(c, dt);
    meta.horizon = T;
    meta.mode = "finite-horizon";
    out.emplace_back(g, W, c.tol_dom, meta);
  }
  return out;
}

ValueTable finite_time_value(const Problem& p, const Grid& g, double T, const SolverConfig& cfg) {
  const double horizons[] = {T};
  return std::move(finite_time_values(p, g, horizons, cfg).front());
}

FattenedResult fattened_value(const Problem& p, const Grid& g, std::span<const double> deltas,
                              const SolverConfig& cfg) {
  const double diag = g.cell_diagonal();
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] >= diag * (1.0 - 1e-9))) {
      std::ostringstream msg;
      msg << "fattening radius " << deltas[k] << " below grid resolution " << diag;
      throw ConfigError(msg.str());
    }
    if (k > 0 && !(deltas[k] < deltas[k - 1])) {
      throw ConfigError("fattening radii must be strictly decreasing");
    }
  }
  FattenedResult out;
  SolverConfig c = cfg;
  c.init = InitRegime::FromAbove;
  for (double delta : deltas) {
    c.delta_target = delta;
    SolveResult r = solve(p, g, c);
    if (!out.tables.empty()) {
      const auto prev = out.tables.back().values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (r.table[i] < prev[i] - cfg.tol) ++out.order_violations;
      }
    }
    out.deltas.push_back(delta);
    out.tables.push_back(std::move(r.table));
  }
  return out;
}

Trajectory synthesize_feedback(const Problem& p, const ValueTable& W, std::span<const double> x,
                               const SolverConfig& cfg_in) {
  SolverConfig cfg = cfg_in;
  cfg.delta_target = W.meta().delta_target;
  cfg.eps = W.meta().eps;
  if (W.meta().dt > 0.0) cfg.dt = W.meta().dt;
  const Grid& g = W.grid();
  const SweepOperator op(p, g, cfg);
  const double dt = op.dt();

  Trajectory traj;
  traj.dt = dt;
  if (p.target.in_fattened(x, cfg.delta_target)) {
    traj.exit_time = 0.0;
    return traj;
  }
  if (!(W.W_at(x, cfg.out_of_box) < 1.0 - W.tol_dom())) {
    throw SynthesisError("initial state outside the domain of W", State(x.begin(), x.end()));
  }
  State y(x.begin(), x.end());
  double cost = 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.synthesis_horizon / dt - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Control& a = op.controls()[op.argmin(W.values(), y)];
    traj.points.push_back(TrajectoryPoint{t, y, a, cost});
    const double l0 = p.stage_cost(y, a, cfg.eps);
    y = integrate_step(p, y, a, dt);
    cost += 0.5 * dt * (l0 + p.stage_cost(y, a, cfg.eps));
    const double t1 = static_cast<double>(k + 1) * dt;
    if (p.target.in_fattened(y, cfg.delta_target)) {
      traj.points.push_back(TrajectoryPoint{t1, y, {}, cost});
      traj.exit_time = t1;
      return traj;
    }
    if (!(W.W_at(y, cfg.out_of_box) < 1.0 - W.tol_dom())) {
      throw SynthesisError("closed-loop trajectory left the domain of W", y);
    }
    if (k + 1 == steps) traj.points.push_back(TrajectoryPoint{t1, y, {}, cost});
  }
  return traj;
}

SolveResult infinite_horizon_value(const Problem& p, const Grid& g, const SolverConfig& cfg,
                                   std::string viability_basis) {
  SolverConfig c = cfg;
  c.init = InitRegime::FromBelow;
  SolveResult r = solve(p, g, c);
  r.table.meta().mode = "infinite-horizon";
  r.table.meta().note = "target x {0} viability: " + std::move(viability_basis);
  return r;
}

}  // namespace kruzkov
