#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kruzkov/errors.hpp"
#include "kruzkov/examples.hpp"
#include "kruzkov/oracle.hpp"
#include "kruzkov/solver.hpp"
#include "kruzkov/transform.hpp"
#include "support.hpp"

using namespace kruzkov;
using testing::problem;

namespace {

const ExampleEntry& ex(const char* name) { return examples::get(name); }

/// Recommended setup with the grid spacing scaled by `coarsen` (cheaper
/// property checks); delta_target follows the new cell diagonal if needed.
struct Setup {
  const Problem& p;
  Grid g;
  SolverConfig cfg;
};

Setup coarse(const char* name, double coarsen) {
  const ExampleEntry& e = ex(name);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < e.grid.dims(); ++i) {
    counts.push_back(static_cast<std::size_t>(
                         std::round((e.grid.count(i) - 1) / coarsen)) + 1);
  }
  Grid g(e.grid.lower(), e.grid.upper(), counts);
  SolverConfig cfg = e.solver;
  cfg.delta_target = std::max(cfg.delta_target, g.cell_diagonal());
  return {e.problem, g, cfg};
}

ValueTable table_of(const Grid& g, const std::function<double(std::span<const double>)>& V) {
  std::vector<double> W(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) W[i] = kruzkov::kruzkov(V(g.node(i)));
  return ValueTable(g, W);
}

}  // namespace

TEST_CASE("sl_update pins the fattened target to zero") {
  const Problem& p = problem("un1");
  const Grid g = Grid::with_spacing({-2.0}, {2.0}, 0.01);
  SolverConfig cfg;
  cfg.delta_target = 0.02;
  const ValueTable ones(g, std::vector<double>(g.size(), 1.0));
  const auto [next, residual] = sl_update(p, g, ones, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.node(i)[0]) <= 0.02) CHECK(next[i] == 0.0);
  }
  CHECK(residual == doctest::Approx(1.0));
}

TEST_CASE("sl_update keeps W = 1 absorbing under strictly positive cost") {
  Dynamics f(1, 1, [](auto, auto a, auto dx) { dx[0] = a[0]; });
  CostFunction l(1, 1, [](auto, auto) { return 0.7; });
  Problem p("const", f, l, ControlSet({-1.0}, {1.0}, {5}), TargetSet::point({5.0}));
  const Grid g({-1.0}, {1.0}, {41});
  SolverConfig cfg;
  cfg.delta_target = 0.05;
  const ValueTable ones(g, std::vector<double>(g.size(), 1.0));
  const auto [next, residual] = sl_update(p, g, ones, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(next[i] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(residual <= 1e-15);
}

TEST_CASE("sl_update: the exact fattened un1 value is a near fixed point") {
  const Problem& p = problem("un1");
  const Grid g = Grid::with_spacing({-2.0}, {2.0}, 0.01);
  SolverConfig cfg;
  cfg.dt = 0.005;
  cfg.delta_target = 0.02;
  // Exit-time value for T_delta: |x| - delta outside, 0 inside.
  ValueTable W = table_of(g, [](auto x) { return std::max(std::abs(x[0]) - 0.02, 0.0); });
  const auto [next, residual] = sl_update(p, g, W, cfg);
  CHECK(residual <= 1e-3);
}

TEST_CASE("CFL violations are configuration errors") {
  const ExampleEntry& e = ex("un1");
  SolverConfig cfg = e.solver;
  cfg.dt = 1.0;
  CHECK_THROWS_AS(solve(e.problem, e.grid, cfg), ConfigError);
  CHECK_THROWS_AS(sl_update(e.problem, e.grid, ValueTable(e.grid, std::vector<double>(e.grid.size(), 1.0)), cfg),
                  ConfigError);
  cfg = e.solver;
  cfg.delta_target = 0.001;
  CHECK_THROWS_AS(solve(e.problem, e.grid, cfg), ConfigError);
  cfg = e.solver;
  cfg.eps = 0.5;
  CHECK_THROWS_AS(solve(e.problem, e.grid, cfg), ConfigError);  // no rho on un1
  CHECK(effective_dt(e.problem, e.grid, e.solver) == doctest::Approx(0.005 / 2.0));
  CHECK(max_speed(e.problem, e.grid) == doctest::Approx(2.0));
}

TEST_CASE("solve: un1 from above recovers |x|") {
  const ExampleEntry& e = ex("un1");
  const SolveResult r = solve(e.problem, e.grid, e.solver);
  CHECK(r.stats.converged);
  CHECK(r.stats.violations == 0);
  CHECK(r.table.V_at(State{1.0}) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.table.meta().init == InitRegime::FromAbove);
  CHECK(r.table.meta().delta_target == 0.02);
}

TEST_CASE("solve: unev from below gives V^m(1) = 0") {
  const ExampleEntry& e = ex("unev");
  SolverConfig cfg = e.solver;
  cfg.init = InitRegime::FromBelow;
  const SolveResult r = solve(e.problem, e.grid, cfg);
  CHECK(r.stats.violations == 0);
  CHECK(r.table.V_at(State{1.0}) <= 0.05);
}

TEST_CASE("solve: un3 from above at (0.8, 0)") {
  const ExampleEntry& e = ex("un3");
  const SolveResult r = solve(e.problem, e.grid, e.solver);
  CHECK(r.stats.converged);
  CHECK(std::abs(r.table.V_at(State{0.8, 0.0}) - 0.16) <= 0.03);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const ExampleEntry& e = ex("un1");
  SolverConfig cfg = e.solver;
  cfg.max_sweeps = 5;
  const SolveResult r = solve(e.problem, e.grid, cfg);
  CHECK_FALSE(r.stats.converged);
  CHECK(r.stats.sweeps == 5);
}

TEST_CASE("warm start from the converged table stops at once") {
  const ExampleEntry& e = ex("un1");
  const SolveResult r = solve(e.problem, e.grid, e.solver);
  const SolveResult again = solve_from(e.problem, e.grid, e.solver, r.table);
  CHECK(again.stats.sweeps <= 2);
}

TEST_CASE("eps ladder on unev descends toward V(1) = 1/2") {
  const ExampleEntry& e = ex("unev");
  SolverConfig cfg = e.solver;
  cfg.eps_ladder = {0.5, 0.25, 0.1, 0.05, 0.0};
  const LadderResult L = solve_eps_ladder(e.problem, e.grid, cfg);
  REQUIRE(L.tables.size() == 5);
  double prev = kInfinity;
  for (std::size_t k = 0; k < L.tables.size(); ++k) {
    const double v = L.tables[k].V_at(State{1.0});
    CHECK(v <= prev + 1e-9);
    CHECK(std::abs(v - (0.5 + L.eps[k])) <= 0.05);
    prev = v;
    if (k > 0) {
      for (std::size_t i = 0; i < e.grid.size(); ++i) {
        CHECK(L.tables[k][i] <= L.tables[k - 1][i] + cfg.tol);
      }
    }
  }
  CHECK(std::abs(L.limit().V_at(State{1.0}) - 0.5) <= 0.05);
}

TEST_CASE("eps ladder with a zero penalty leaves the tables equal") {
  const Problem p = testing::un1_variant(TargetSet::point({0.0}),
                                         CostFunction(1, 1, [](auto, auto) { return 0.0; }));
  const Grid g = Grid::with_spacing({-2.0}, {2.0}, 0.01);
  SolverConfig cfg;
  cfg.delta_target = 0.02;
  cfg.eps_ladder = {1.0, 0.1, 0.0};
  const LadderResult L = solve_eps_ladder(p, g, cfg);
  for (std::size_t k = 1; k < L.tables.size(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(std::abs(L.tables[k][i] - L.tables[0][i]) <= 10 * cfg.tol);
    }
  }
}

TEST_CASE("eps ladder on un1 with a control penalty converges to V(1) = 1") {
  const Problem p = testing::un1_variant(TargetSet::point({0.0}),
                                         CostFunction(1, 1, [](auto, auto a) { return a[0]; }));
  const Grid g = Grid::with_spacing({-2.0}, {2.0}, 0.01);
  SolverConfig cfg;
  cfg.delta_target = 0.02;
  const LadderResult L = solve_eps_ladder(p, g, cfg);
  CHECK(std::abs(L.limit().V_at(State{1.0}) - 1.0) <= 0.05);
  // Same limit from the oracle's penalized estimate at the end of the ladder,
  // truncated at the solver's target radius.
  OracleConfig oc;
  oc.delta_adm = 0.02;
  const double oracle = estimate_Veps(p, State{1.0}, 0.0, oc).value;
  CHECK(std::abs(L.limit().V_at(State{1.0}) - oracle) <= 0.05);
}

TEST_CASE("eps ladder needs rho and a strictly decreasing ladder") {
  const ExampleEntry& e = ex("un1");
  CHECK_THROWS_AS(solve_eps_ladder(e.problem, e.grid, e.solver), ConfigError);
  const ExampleEntry& u = ex("unev");
  SolverConfig cfg = u.solver;
  cfg.eps_ladder = {0.1, 0.5};
  CHECK_THROWS_AS(solve_eps_ladder(u.problem, u.grid, cfg), ConfigError);
}

TEST_CASE("non-uniqueness gap on unev") {
  const ExampleEntry& e = ex("unev");
  const GapResult g = nonuniqueness_gap(e.problem, e.grid, e.solver);
  const double gap1 = g.above.W_at(State{1.0}) - g.below.W_at(State{1.0});
  CHECK(std::abs(gap1 - (1.0 - std::exp(-0.5))) <= 0.03);
  for (double d : g.gap) CHECK(d >= -e.solver.tol);
  CHECK(g.sup_gap >= gap1 - 1e-12);
}

TEST_CASE("no gap on un1") {
  const ExampleEntry& e = ex("un1");
  const GapResult g = nonuniqueness_gap(e.problem, e.grid, e.solver);
  CHECK(g.sup_gap <= 0.05);
  CHECK(g.above_stats.violations == 0);
  CHECK(g.below_stats.violations == 0);
}

TEST_CASE("no gap on un3 over the annulus") {
  const ExampleEntry& e = ex("un3");
  const GapResult g = nonuniqueness_gap(e.problem, e.grid, e.solver);
  double worst = 0.0;
  for (std::size_t i = 0; i < e.grid.size(); ++i) {
    const State x = e.grid.node(i);
    const double r = std::hypot(x[0], x[1]);
    if (r >= 0.1 && r <= 0.9) worst = std::max(worst, g.gap[i]);
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("finite horizon values on un1") {
  const ExampleEntry& e = ex("un1");
  SolverConfig cfg = e.solver;
  cfg.delta_target = 0.1;
  const double dt = effective_dt(e.problem, e.grid, cfg);
  const std::vector<double> Ts{dt, 1.0, 2.0, 4.0, 8.0};
  const auto tables = finite_time_values(e.problem, e.grid, Ts, cfg);
  REQUIRE(tables.size() == Ts.size());
  CHECK(tables[0].W_at(State{1.5}) == doctest::Approx(1.0));
  CHECK(std::isinf(tables[1].V_at(State{1.0})));  // ln 10 > 1
  CHECK(std::abs(tables[3].V_at(State{1.0}) - 0.9) <= 0.05);
  CHECK(std::abs(tables[4].V_at(State{1.0}) - 0.9) <= 0.05);
  for (std::size_t k = 1; k < tables.size(); ++k) {
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      CHECK(tables[k][i] <= tables[k - 1][i] + cfg.tol);
    }
  }
  const ValueTable single = finite_time_value(e.problem, e.grid, 4.0, cfg);
  for (std::size_t i = 0; i < e.grid.size(); ++i) CHECK(single[i] == tables[3][i]);
  CHECK(single.meta().horizon == 4.0);
  const std::vector<double> bad{2.0, 1.0};
  CHECK_THROWS_AS(finite_time_values(e.problem, e.grid, bad, cfg), ConfigError);
}

TEST_CASE("target fattening on un1") {
  const ExampleEntry& e = ex("un1");
  const std::vector<double> deltas{0.4, 0.2, 0.1};
  const FattenedResult F = fattened_value(e.problem, e.grid, deltas, e.solver);
  REQUIRE(F.tables.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(F.tables[k].V_at(State{1.0}) - (1.0 - deltas[k])) <= 0.05);
    CHECK(F.tables[k].V_at(State{deltas[k] * 0.9}) == 0.0);
  }
  CHECK(F.order_violations == 0);
  for (std::size_t k = 1; k < 3; ++k) {
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      CHECK(F.tables[k][i] >= F.tables[k - 1][i] - e.solver.tol);
    }
  }
  const std::vector<double> tiny{0.001};
  CHECK_THROWS_AS(fattened_value(e.problem, e.grid, tiny, e.solver), ConfigError);
  const std::vector<double> rising{0.1, 0.2};
  CHECK_THROWS_AS(fattened_value(e.problem, e.grid, rising, e.solver), ConfigError);
}

TEST_CASE("feedback synthesis realizes the table value") {
  {
    const ExampleEntry& e = ex("un1");
    const SolveResult r = solve(e.problem, e.grid, e.solver);
    const Trajectory tr = synthesize_feedback(e.problem, r.table, State{1.0}, e.solver);
    REQUIRE(tr.exit_time.has_value());
    CHECK(tr.cost() <= r.table.V_at(State{1.0}) + 0.1);
    const Trajectory none = synthesize_feedback(e.problem, r.table, State{0.01}, e.solver);
    CHECK(none.points.empty());
    CHECK(none.cost() == 0.0);
  }
  {
    const ExampleEntry& e = ex("un3");
    const SolveResult r = solve(e.problem, e.grid, e.solver);
    const Trajectory tr = synthesize_feedback(e.problem, r.table, State{0.8, 0.0}, e.solver);
    CHECK(tr.cost() <= 0.16 + 0.05);
  }
}

TEST_CASE("synthesis refuses states outside the domain of W") {
  const ExampleEntry& e = ex("un1");
  SolverConfig cfg = e.solver;
  cfg.delta_target = 0.1;
  const ValueTable t = finite_time_value(e.problem, e.grid, 1.0, cfg);
  CHECK_THROWS_AS(synthesize_feedback(e.problem, t, State{1.0}, cfg), SynthesisError);
}

TEST_CASE("infinite-horizon mode") {
  {
    const ExampleEntry& e = ex("un1");
    const SolveResult above = solve(e.problem, e.grid, e.solver);
    const SolveResult inf = infinite_horizon_value(e.problem, e.grid, e.solver, "SC2 holds");
    CHECK(inf.table.meta().init == InitRegime::FromBelow);
    CHECK(inf.table.meta().note.find("SC2 holds") != std::string::npos);
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      if (above.table.in_domain(i) && inf.table.in_domain(i)) {
        CHECK(std::abs(above.table.V(i) - inf.table.V(i)) <= 0.05);
      }
    }
  }
  {
    const ExampleEntry& e = ex("aq1d");
    const SolveResult inf = infinite_horizon_value(e.problem, e.grid, e.solver);
    CHECK(inf.table.V_at(State{0.0}) == 0.0);
    OracleConfig oc;
    oc.switches = 8;
    const double oracle = estimate_Vm(e.problem, State{0.5}, oc).value;
    CHECK(std::abs(inf.table.V_at(State{0.5}) - oracle) <= 0.05);
  }
}

// ---------------------------------------------------------------------------
// Monotone-scheme properties on every example (coarsened grids).

TEST_CASE("every sweep keeps W in [0,1]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"un1", "un3", "unev", "aq1d"}) {
    CAPTURE(name);
    Setup s = coarse(name, 2.0);
    std::vector<double> W0(s.g.size());
    for (auto& w : W0) w = u(rng);
    ValueTable W(s.g, W0);
    for (int k = 0; k < 30; ++k) {
      auto [next, res] = sl_update(s.p, s.g, W, s.cfg);
      for (double w : next.values()) {
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
      }
      W = std::move(next);
    }
  }
}

TEST_CASE("the update operator is monotone") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"un1", "un3", "unev", "aq1d"}) {
    CAPTURE(name);
    Setup s = coarse(name, 2.0);
    for (int pair = 0; pair < 100; ++pair) {
      std::vector<double> W1(s.g.size()), W2(s.g.size());
      for (std::size_t i = 0; i < W1.size(); ++i) {
        W1[i] = u(rng);
        W2[i] = std::min(1.0, W1[i] + u(rng) * (1.0 - W1[i]));
      }
      const auto r1 = sl_update(s.p, s.g, ValueTable(s.g, W1), s.cfg);
      const auto r2 = sl_update(s.p, s.g, ValueTable(s.g, W2), s.cfg);
      std::size_t bad = 0;
      for (std::size_t i = 0; i < W1.size(); ++i) bad += r1.first[i] > r2.first[i] + 1e-15;
      CHECK(bad == 0);
    }
  }
}

TEST_CASE("directional convergence and bracketing") {
  for (const char* name : {"un1", "un3", "unev", "aq1d"}) {
    CAPTURE(name);
    Setup s = coarse(name, 2.0);
    const GapResult g = nonuniqueness_gap(s.p, s.g, s.cfg);
    CHECK(g.above_stats.violations == 0);
    CHECK(g.below_stats.violations == 0);
    for (std::size_t i = 0; i < s.g.size(); ++i) CHECK(g.below[i] <= g.above[i] + s.cfg.tol);
  }
}

TEST_CASE("strictly positive cost contracts at rate e^{-c dt}") {
  const ExampleEntry& e = ex("unev");
  SolverConfig cfg = e.solver;
  cfg.eps = 0.5;
  cfg.record_residuals = true;
  const SolveResult r = solve(e.problem, e.grid, cfg);
  REQUIRE(r.stats.converged);
  const double dt = effective_dt(e.problem, e.grid, cfg);
  // c = min (l + eps rho) over nodes outside T_delta.
  double c = kInfinity;
  for (std::size_t i = 0; i < e.grid.size(); ++i) {
    const State x = e.grid.node(i);
    if (std::abs(x[0]) > cfg.delta_target) {
      c = std::min(c, e.problem.stage_cost(x, Control{0.0}, cfg.eps));
    }
  }
  const auto& res = r.stats.residuals;
  REQUIRE(res.size() > 100);
  double worst = 0.0;
  for (std::size_t k = res.size() / 2; k + 1 < res.size(); ++k) {
    if (res[k] > 0.0) worst = std::max(worst, res[k + 1] / res[k]);
  }
  CHECK(worst <= std::exp(-c * dt) + 0.05);
}
