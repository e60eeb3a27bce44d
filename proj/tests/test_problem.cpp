#include <doctest.h>

#include <cmath>
#include <random>

#include "kruzkov/errors.hpp"
#include "kruzkov/problem.hpp"
#include "support.hpp"

using namespace kruzkov;
using testing::problem;

TEST_CASE("integrate_step reproduces the exponential flow of un1") {
  const State y = integrate_step(problem("un1"), State{1.0}, Control{1.0}, 0.1);
  // RK4 local error for y' = -y is dt^5/120 ~ 8e-8.
  CHECK(y[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-6));
  CHECK(y[0] == doctest::Approx(0.904837).epsilon(1e-6));
}

TEST_CASE("integrate_step leaves an equilibrium unchanged") {
  const State y = integrate_step(problem("un1"), State{0.0}, Control{0.7}, 0.5);
  CHECK(y[0] == 0.0);
}

TEST_CASE("integrate_step on un3 with a = 0") {
  const State y = integrate_step(problem("un3"), State{1.0, 0.0}, Control{0.0}, 0.05);
  // RK4 on x' = -x reproduces the degree-4 Taylor polynomial of e^{-h}.
  const double h = 0.05;
  CHECK(y[0] == doctest::Approx(1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24).epsilon(1e-14));
  CHECK(std::abs(y[0] - std::exp(-h)) <= std::pow(h, 5) / 120);
  CHECK(y[1] == 0.0);
}

TEST_CASE("integrate_step reports non-finite dynamics with the state") {
  Dynamics f(1, 1, [](auto x, auto, auto dx) { dx[0] = std::sqrt(x[0]); });
  CostFunction l(1, 1, [](auto, auto) { return 0.0; });
  Problem p("sqrt", f, l, ControlSet({0.0}, {1.0}, {2}), TargetSet::point({0.0}));
  try {
    integrate_step(p, State{-1.0}, Control{0.0}, 0.1);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    REQUIRE(e.state().size() == 1);
    CHECK(e.state()[0] == -1.0);
  }
}

TEST_CASE("simulate un1 to radius 0.1 with full control") {
  const double dt = 1e-3;
  const Trajectory tr =
      simulate(problem("un1"), State{1.0}, ControlSchedule::constant({1.0}), dt, 10.0, 0.1);
  REQUIRE(tr.exit_time.has_value());
  CHECK(std::abs(*tr.exit_time - std::log(10.0)) <= 2 * dt);
  // int_0^{ln 10} e^{-t} dt = 0.9
  CHECK(tr.cost() == doctest::Approx(0.9).epsilon(0.01 / 0.9));
}

TEST_CASE("simulate from a point of the target exits at once") {
  const Trajectory tr =
      simulate(problem("un1"), State{0.0}, ControlSchedule::constant({0.3}), 0.01, 5.0, 0.0);
  REQUIRE(tr.exit_time.has_value());
  CHECK(*tr.exit_time == 0.0);
  CHECK(tr.cost() == 0.0);
}

TEST_CASE("simulate unev standing still at x = 1") {
  const Trajectory tr =
      simulate(problem("unev"), State{1.0}, ControlSchedule::constant({0.0}), 0.01, 10.0, 0.05);
  CHECK_FALSE(tr.exit_time.has_value());
  CHECK(tr.cost() == 0.0);
  CHECK(tr.points.back().t == doctest::Approx(10.0));
}

TEST_CASE("simulate aborts when the state leaves the safety box") {
  Dynamics f(1, 1, [](auto x, auto, auto dx) { dx[0] = x[0]; });
  CostFunction l(1, 1, [](auto, auto) { return 1.0; });
  Problem p("growth", f, l, ControlSet({0.0}, {1.0}, {2}), TargetSet::point({0.0}), std::nullopt,
            Box{{-1.0}, {1.0}});
  CHECK(p.safety_radius() == doctest::Approx(20.0));
  try {
    simulate(p, State{1.0}, ControlSchedule::constant({0.0}), 0.01, 100.0, 0.0);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::abs(e.state()[0]) > 20.0);
  }
}

TEST_CASE("distance to built-in targets") {
  CHECK(distance(problem("un1"), State{-2.0}) == 2.0);
  CHECK(TargetSet::ball({0.0, 0.0}, 1.0).distance(State{2.0, 0.0}) == doctest::Approx(1.0));
  CHECK(TargetSet::point({0.0, 0.0}).distance(State{3.0, 4.0}) == doctest::Approx(5.0));
  const TargetSet box = TargetSet::box({0.0, 0.0}, {1.0, 1.0});
  CHECK(box.distance(State{0.5, 0.5}) == 0.0);
  CHECK(box.distance(State{2.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(box.distance(State{0.5, -3.0}) == doctest::Approx(3.0));
}

TEST_CASE("target distance: zero exactly on T, 1-Lipschitz, fattening by threshold") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const TargetSet& T : {TargetSet::point({0.5, -0.5}), TargetSet::ball({0.0, 1.0}, 0.75),
                             TargetSet::box({-1.0, 0.0}, {0.5, 2.0})}) {
    for (int i = 0; i < 500; ++i) {
      const State x{u(rng), u(rng)}, y{u(rng), u(rng)};
      const double dx = T.distance(x), dy = T.distance(y);
      CHECK(dx >= 0.0);
      CHECK(std::abs(dx - dy) <= std::hypot(x[0] - y[0], x[1] - y[1]) + 1e-12);
      CHECK(T.contains(x) == (dx == 0.0));
      CHECK(T.in_fattened(x, 0.3) == (dx <= 0.3));
    }
  }
}

TEST_CASE("point targets expose a point at a given distance") {
  const TargetSet T = TargetSet::ball({1.0, 1.0}, 0.5);
  const auto x = T.point_at_distance(std::vector<double>{0.0, 1.0}, 0.25);
  REQUIRE(x.has_value());
  CHECK(T.distance(*x) == doctest::Approx(0.25));
}

TEST_CASE("control set sampling") {
  const ControlSet A({-1.0, 0.0}, {1.0, 2.0}, {3, 5});
  const auto samples = A.samples();
  CHECK(samples.size() == 15);
  CHECK(A.sample_count() == 15);
  for (const auto& a : samples) CHECK(A.contains(a));
  CHECK(A.spacing(0) == doctest::Approx(1.0));
  CHECK(A.spacing(1) == doctest::Approx(0.5));
  CHECK(A.clamp(std::vector<double>{3.0, -1.0}) == Control{1.0, 0.0});
  CHECK_FALSE(A.contains(std::vector<double>{0.0, 2.5}));
  CHECK(ControlSet({0.0}, {1.0}, {1}).samples().size() == 1);
  CHECK_THROWS_AS(ControlSet({0.0}, {1.0}, {0}), ConfigError);
  CHECK_THROWS_AS(ControlSet({1.0}, {0.0}, {3}), ConfigError);
  CHECK_THROWS_AS(ControlSet({0.0}, {INFINITY}, {3}), ConfigError);
}

TEST_CASE("problem components must agree on dimensions") {
  Dynamics f(2, 1, [](auto, auto, auto dx) { dx[0] = dx[1] = 0.0; });
  CostFunction l1(1, 1, [](auto, auto) { return 0.0; });
  CostFunction l2(2, 1, [](auto, auto) { return 0.0; });
  CHECK_THROWS_AS(Problem("bad", f, l1, ControlSet({0.0}, {1.0}, {2}), TargetSet::point({0, 0})),
                  ConfigError);
  CHECK_THROWS_AS(Problem("bad", f, l2, ControlSet({0.0}, {1.0}, {2}), TargetSet::point({0})),
                  ConfigError);
  CHECK_THROWS_AS(
      Problem("bad", f, l2, ControlSet({0.0, 0.0}, {1.0, 1.0}, {2, 2}), TargetSet::point({0, 0})),
      ConfigError);
  CHECK_NOTHROW(Problem("ok", f, l2, ControlSet({0.0}, {1.0}, {2}), TargetSet::point({0, 0})));
}

TEST_CASE("sampled growth and sign checks") {
  const Problem& p = problem("aq1d");
  CHECK_FALSE(p.dynamics.linear_growth_violation(*p.domain, p.controls, 2.0, 500, 1));
  CHECK(p.dynamics.linear_growth_violation(*p.domain, p.controls, 0.1, 500, 1));
  CHECK_FALSE(p.running_cost.negativity_violation(*p.domain, p.controls, 500, 1));
  CostFunction neg(1, 1, [](auto x, auto) { return x[0]; });
  CHECK(neg.negativity_violation(*p.domain, p.controls, 500, 1));
}

TEST_CASE("control schedules are piecewise constant and hold the last segment") {
  const ControlSchedule s({{0.5, {1.0}}, {1.0, {0.0}}, {0.25, {0.5}}});
  CHECK(s.at(0.0)[0] == 1.0);
  CHECK(s.at(0.49)[0] == 1.0);
  CHECK(s.at(0.5)[0] == 0.0);
  CHECK(s.at(1.6)[0] == 0.5);
  CHECK(s.at(100.0)[0] == 0.5);
  CHECK(s.index_at(1.0) == 1);
  CHECK(s.index_at(50.0) == 2);
}

TEST_CASE("trajectories: uniform times, nondecreasing cost, exit consistency") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"un1", "un3", "unev", "aq1d"}) {
    const Problem& p = problem(name);
    const std::size_t n = p.state_dim();
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ControlSchedule::Segment> segs;
      for (int k = 0; k < 3; ++k) {
        Control a(p.control_dim());
        for (std::size_t j = 0; j < a.size(); ++j) {
          a[j] = p.controls.lo()[j] + u(rng) * (p.controls.hi()[j] - p.controls.lo()[j]);
        }
        segs.push_back({0.2 + u(rng), a});
      }
      State x(n);
      for (auto& c : x) c = 2.0 * u(rng) - 1.0;
      const double dt = 0.01, stop = 0.05;
      const Trajectory tr = simulate(p, x, ControlSchedule(segs), dt, 8.0, stop);
      REQUIRE(!tr.points.empty());
      for (std::size_t i = 1; i < tr.points.size(); ++i) {
        CHECK(tr.points[i].t - tr.points[i - 1].t == doctest::Approx(dt).epsilon(1e-9));
        CHECK(tr.points[i].cost >= tr.points[i - 1].cost);
      }
      if (tr.exit_time) {
        CHECK(distance(p, tr.final_state()) <= stop);
        CHECK(tr.points.back().t == doctest::Approx(*tr.exit_time));
        for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
          CHECK(distance(p, tr.points[i].x) > stop);
        }
      }
    }
  }
}

TEST_CASE("RK4 global error is fourth order") {
  // un3 with a = 0.5: y(t) = y0 e^{-1.5 t}. Steps below ~1e-2 would push the
  // error into round-off, so the fit uses a coarser ladder.
  const Problem& p = problem("un3");
  const State x{0.8, -0.4};
  std::vector<double> lx, ly;
  for (double dt : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const Trajectory tr = simulate(p, x, ControlSchedule::constant({0.5}), dt, 2.0, 0.0);
    CHECK(tr.points.back().t == doctest::Approx(2.0));
    const double exact = std::exp(-3.0);
    const double err = std::hypot(tr.final_state()[0] - 0.8 * exact,
                                  tr.final_state()[1] + 0.4 * exact);
    lx.push_back(std::log(dt));
    ly.push_back(std::log(err));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  CHECK(sxy / sxx >= 3.5);
}

TEST_CASE("rollout agrees with simulate and honours the cost cap") {
  const Problem& p = problem("un1");
  const auto pol = ControlSchedule::constant({0.5});
  const Trajectory tr = simulate(p, State{1.5}, pol, 0.01, 20.0, 0.05);
  const RolloutResult r = rollout(p, State{1.5}, pol, 0.01, 20.0, 0.05);
  CHECK(r.cost == doctest::Approx(tr.cost()).epsilon(1e-12));
  REQUIRE(r.exit_time.has_value());
  CHECK(*r.exit_time == doctest::Approx(*tr.exit_time));
  const RolloutResult capped = rollout(p, State{1.5}, pol, 0.01, 20.0, 0.05, 0.0, 0.5);
  CHECK(capped.capped);
}

TEST_CASE("stage cost adds the weighted penalty") {
  const Problem& p = problem("unev");
  CHECK(p.stage_cost(State{2.0}, Control{0.0}, 0.0) == doctest::Approx(2.0));
  CHECK(p.stage_cost(State{2.0}, Control{0.0}, 0.5) == doctest::Approx(3.0));
  CHECK(problem("un1").stage_cost(State{2.0}, Control{0.0}, 0.5) == doctest::Approx(2.0));
}
