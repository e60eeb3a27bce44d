#include "kruzkov/examples.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kruzkov/errors.hpp"

namespace kruzkov {

double Reference::operator()(std::span<const double> x) const {
  if (kind == Kind::Unknown) throw LookupError("no reference value function is known");
  return fn(x);
}

bool ExampleEntry::holds(Condition c) const {
  return std::find(conditions.begin(), conditions.end(), c) != conditions.end();
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Reference formula(std::string text, std::function<double(std::span<const double>)> fn,
                  std::string note = {}) {
  return Reference{Reference::Kind::Formula, std::move(text), std::move(fn), std::move(note)};
}

Reference infinite_off(const TargetSet& T) {
  return Reference{Reference::Kind::Infinite, "+inf off T",
                   [T](std::span<const double> x) { return T.contains(x) ? 0.0 : kInf; },
                   {}};
}

SolverConfig solver_with(double delta) {
  SolverConfig cfg;
  cfg.delta_target = delta;
  return cfg;
}

ExampleEntry make_un1() {
  Dynamics f(1, 1, [](auto x, auto a, auto dx) { dx[0] = -x[0] * a[0]; });
  CostFunction l(1, 1, [](auto x, auto) { return std::abs(x[0]); });
  TargetSet T = TargetSet::point({0.0});
  Problem p("un1", f, l, ControlSet({0.0}, {1.0}, {21}), T, std::nullopt, Box{{-2.0}, {2.0}});
  ExampleEntry e{
      .name = "un1",
      .summary = "1-D, f = -x a, l = |x|, A = [0,1], T = {0}; V = V^m = |x| but V^f = +inf",
      .f_text = {"-x1*a1"},
      .l_text = "abs(x1)",
      .rho_text = {},
      .problem = p,
      .grid = Grid::with_spacing({-2.0}, {2.0}, 0.005),
      .solver = solver_with(0.02),
  };
  e.V = formula("abs(x1)", [](auto x) { return std::abs(x[0]); });
  e.Vf = infinite_off(T);
  e.Vm = formula("abs(x1)", [](auto x) { return std::abs(x[0]); });
  e.mrf.push_back(MrfReference{"abs(x1)", [](auto x) { return std::abs(x[0]); }, 0.0, 1.0});
  e.conditions = {Condition::SC2, Condition::CV, Condition::LACL};
  e.sc2_c2 = "s/2";
  e.notes.push_back("no trajectory reaches 0 in finite time: |y(t)| >= |x| e^{-t}");
  return e;
}

ExampleEntry make_un3() {
  Dynamics f(2, 1, [](auto x, auto a, auto dx) {
    dx[0] = -x[0] - x[0] * a[0];
    dx[1] = -x[1] - x[1] * a[0];
  });
  CostFunction l(2, 1, [](auto x, auto) { return x[0] * x[0]; });
  TargetSet T = TargetSet::point({0.0, 0.0});
  Problem p("un3", f, l, ControlSet({0.0}, {1.0}, {11}), T, std::nullopt,
            Box{{-1.0, -1.0}, {1.0, 1.0}});
  ExampleEntry e{
      .name = "un3",
      .summary = "2-D, f = -x - x a, l = x1^2, A = [0,1], T = {0}; V = x1^2/4, V^f = +inf",
      .f_text = {"-x1-x1*a1", "-x2-x2*a1"},
      .l_text = "sq(x1)",
      .rho_text = {},
      .problem = p,
      .grid = Grid::with_spacing({-1.0, -1.0}, {1.0, 1.0}, 0.02),
      .solver = solver_with(0.05),
  };
  auto v = [](std::span<const double> x) { return 0.25 * x[0] * x[0]; };
  e.V = formula("sq(x1)/4", v);
  e.Vf = infinite_off(T);
  e.Vm = formula("sq(x1)/4", v, "equal to V since SC1 holds");
  e.mrf.push_back(MrfReference{"(sq(x1)+sq(x2))/4",
                               [](auto x) { return 0.25 * (x[0] * x[0] + x[1] * x[1]); }, 0.0,
                               1.0});
  e.conditions = {Condition::SC1, Condition::CV, Condition::LACL};
  e.sc1_U = "(sq(x1)+sq(x2))/4";
  e.sc1_m = "sq(s)/4";
  return e;
}

ExampleEntry make_unev() {
  Dynamics f(1, 1, [](auto x, auto a, auto dx) { dx[0] = -x[0] * a[0]; });
  CostFunction l(1, 1, [](auto x, auto) { return std::abs(x[0] * x[0] - x[0]); });
  CostFunction rho(1, 1, [](auto x, auto) { return std::abs(x[0]); });
  TargetSet T = TargetSet::point({0.0});
  Problem p("unev", f, l, ControlSet({0.0}, {1.0}, {21}), T, rho, Box{{-0.5}, {2.5}});
  ExampleEntry e{
      .name = "unev",
      .summary = "1-D, f = -x a, l = |x^2 - x|, rho = |x|, A = [0,1], T = {0}; l vanishes at "
                 "x = 1, so V^m(1) = 0 < V(1) = 1/2",
      .f_text = {"-x1*a1"},
      .l_text = "abs(sq(x1)-x1)",
      .rho_text = "abs(x1)",
      .problem = p,
      .grid = Grid::with_spacing({-0.5}, {2.5}, 0.005),
      .solver = solver_with(0.02),
  };
  auto v = [](std::span<const double> x) { return std::abs(x[0] - 0.5 * x[0] * x[0]); };
  e.V = formula("abs(x1-sq(x1)/2)", v,
                "exact for x <= 1; for x > 1 the exit-time value is 1/2 + (x-1)^2/2");
  e.Vm = formula(
      "abs(x1-sq(x1)/2) for x1 < 1, sq(x1-1)/2 for x1 >= 1",
      [v](std::span<const double> x) {
        return x[0] < 1.0 ? v(x) : 0.5 * (x[0] - 1.0) * (x[0] - 1.0);
      },
      "trajectories from x > 1 may stop at the zero x = 1 of l");
  e.V_eps = [v](std::span<const double> x, double eps) { return v(x) + eps * std::abs(x[0]); };
  e.V_eps_text = "abs(x1-sq(x1)/2) + eps*abs(x1)";
  // Beyond U = 3/2 (x > 1) the inequality fails on (2/(1+k), 2).
  e.mrf.push_back(MrfReference{"abs(x1-sq(x1)/2)+abs(x1)",
                               [v](auto x) { return v(x) + std::abs(x[0]); }, 0.0, 1.0, 1.5,
                               true});
  e.notes.push_back("SC1 and SC2 fail; the value is not unique");
  e.notes.push_back("CV holds numerically: L(x) is a segment above a constant cost");
  return e;
}

ExampleEntry make_aq1d() {
  Dynamics f(1, 1, [](auto x, auto a, auto dx) { dx[0] = -x[0] + a[0]; });
  CostFunction l(1, 1, [](auto x, auto a) { return x[0] * x[0] + a[0] * a[0]; });
  TargetSet T = TargetSet::point({0.0});
  Problem p("aq1d", f, l, ControlSet({-1.0}, {1.0}, {21}), T, std::nullopt, Box{{-2.0}, {2.0}});
  ExampleEntry e{
      .name = "aq1d",
      .summary = "1-D linear-quadratic, f = -x + a, l = x^2 + a^2, A = [-1,1], T = {0}",
      .f_text = {"-x1+a1"},
      .l_text = "sq(x1)+sq(a1)",
      .rho_text = {},
      .problem = p,
      .grid = Grid::with_spacing({-2.0}, {2.0}, 0.01),
      .solver = solver_with(0.02),
  };
  // Riccati: -2P - P^2 + 1 = 0, feedback a = -P x stays inside A on [-2,2].
  const double P = std::sqrt(2.0) - 1.0;
  e.V = formula("(sqrt(2)-1)*sq(x1)", [P](auto x) { return P * x[0] * x[0]; },
                "linear-quadratic feedback is unsaturated for |x| <= 1/(sqrt(2)-1)");
  e.conditions = {Condition::SC2, Condition::CV};
  e.sc2_c2 = "sq(s)";
  // Oracle regression values: estimate_Vm, horizon 20, dt 0.01, delta_adm 0.05,
  // 21 controls, K = 3 switches, 2 restarts, 4 refinement rounds, seed 1.
  e.fixtures = {
      {{-1.5}, 0.94493230618784441, 3},
      {{-0.5}, 0.1036063534594754, 3},
      {{0.5}, 0.1036063534594754, 3},
      {{1.0}, 0.41883547219887485, 3},
      {{1.5}, 0.94493230618784441, 3},
  };
  e.notes.push_back("oracle fixtures are regression values for V^m at K = 3");
  return e;
}

const std::map<std::string, ExampleEntry, std::less<>>& registry() {
  static const auto* reg = [] {
    auto* m = new std::map<std::string, ExampleEntry, std::less<>>();
    for (auto make : {make_un1, make_un3, make_unev, make_aq1d}) {
      ExampleEntry e = make();
      std::string key = e.name;
      m->emplace(std::move(key), std::move(e));
    }
    return m;
  }();
  return *reg;
}

}  // namespace

namespace examples {

const std::vector<std::string>& names() {
  static const std::vector<std::string> list = {"un1", "un3", "unev", "aq1d"};
  return list;
}

const ExampleEntry& get(std::string_view name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    std::string all;
    for (const auto& n : names()) all += (all.empty() ? "" : ", ") + n;
    throw LookupError("unknown example '" + std::string(name) + "'; available: " + all);
  }
  return it->second;
}

}  // namespace examples

}  // namespace kruzkov
