#include <benchmark/benchmark.h>

#include "kruzkov/examples.hpp"
#include "kruzkov/expr.hpp"
#include "kruzkov/oracle.hpp"
#include "kruzkov/solver.hpp"

using namespace kruzkov;

namespace {

// One Jacobi sweep of the semi-Lagrangian operator on the example grid.
void BM_Sweep(benchmark::State& state, const char* name) {
  const ExampleEntry& e = examples::get(name);
  ValueTable W(e.grid, std::vector<double>(e.grid.size(), 1.0));
  for (auto _ : state) {
    auto next = sl_update(e.problem, e.grid, W, e.solver);
    benchmark::DoNotOptimize(next.second);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(e.grid.size()));
}
BENCHMARK_CAPTURE(BM_Sweep, un1, "un1");
BENCHMARK_CAPTURE(BM_Sweep, un3, "un3");

void BM_SolveUn1(benchmark::State& state) {
  const ExampleEntry& e = examples::get("un1");
  SolverConfig cfg = e.solver;
  cfg.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve(e.problem, e.grid, cfg).stats.sweeps);
}
BENCHMARK(BM_SolveUn1)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const ExampleEntry& e = examples::get("aq1d");
  OracleConfig oc;
  oc.switches = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_Vm(e.problem, State{0.8}, oc).value);
}
BENCHMARK(BM_Oracle)->Arg(0)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ExprEval(benchmark::State& state) {
  const Expr f = parse("-x1*a1 + sq(x2) / (1 + abs(x1)) + exp(-x2)", 2, 1);
  const double x[2] = {0.3, -0.7};
  const double a[1] = {0.5};
  for (auto _ : state) benchmark::DoNotOptimize(f.eval(x, a));
}
BENCHMARK(BM_ExprEval);

}  // namespace

BENCHMARK_MAIN();
