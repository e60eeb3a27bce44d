#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "kruzkov/expr.hpp"
#include "kruzkov/oracle.hpp"
#include "kruzkov/solver.hpp"
#include "kruzkov/table_io.hpp"
#include "kruzkov/verifiers.hpp"

namespace kruzkov::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) { return format_number(v); }

std::string point_label(std::span<const double> x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + num(x[i]);
  return s;
}

fs::path output_path(const RunConfig& cfg, const std::string& stem, const char* ext = ".csv") {
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir / (stem + ext);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
}

void print_stats(std::ostream& out, std::ostream& err, const std::string& label,
                 const SweepStats& s) {
  out << label << ": sweeps=" << s.sweeps << " residual=" << num(s.residual)
      << " converged=" << (s.converged ? "true" : "false") << " violations=" << s.violations
      << '\n';
  if (!s.converged) {
    err << "warning: " << label << " did not converge (residual " << num(s.residual) << " after "
        << s.sweeps << " sweeps); table written anyway\n";
  }
}

std::vector<double> default_probe(std::size_t n) {
  std::vector<double> x(n, 0.0);
  x[0] = 1.0;
  return x;
}

}  // namespace

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("malformed point '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty point");
  return out;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const RunConfig& cfg, const SolveOptions& opt, std::ostream& out,
              std::ostream& err) {
  const Problem& p = cfg.prob();
  const Grid grid = cfg.grid_or_default();
  SolverConfig sc = cfg.solver;
  sc.threads = cfg.threads;
  const double dt = effective_dt(p, grid, sc);
  out << "problem=" << cfg.name << " nodes=" << grid.size() << " dt=" << num(dt) << " delta_target=" << num(sc.delta_target)
      << '\n';

  auto emit = [&](const ValueTable& t, const std::string& stem, const SweepStats* stats) {
    const fs::path path = output_path(cfg, cfg.name + "_" + stem);
    write_table(path, t, cfg.name, stats);
    out << "wrote " << path.string() << '\n';
  };

  if (opt.dual) {
    const GapResult g = nonuniqueness_gap(p, grid, sc);
    print_stats(out, err, "above", g.above_stats);
    print_stats(out, err, "below", g.below_stats);
    out << "sup_gap=" << num(g.sup_gap) << '\n';
    emit(g.above, "above", &g.above_stats);
    emit(g.below, "below", &g.below_stats);
    return kOk;
  }
  if (opt.ladder) {
    const LadderResult L = solve_eps_ladder(p, grid, sc);
    for (std::size_t i = 0; i < L.eps.size(); ++i) {
      print_stats(out, err, "eps=" + num(L.eps[i]), L.stats[i]);
      emit(L.tables[i], "eps" + num(L.eps[i]), &L.stats[i]);
    }
    return kOk;
  }
  if (opt.horizon) {
    const ValueTable t = finite_time_value(p, grid, *opt.horizon, sc);
    out << "finite horizon T=" << num(*opt.horizon) << '\n';
    emit(t, "T" + num(*opt.horizon), nullptr);
    return kOk;
  }
  const SolveResult r = opt.infinite
                            ? infinite_horizon_value(p, grid, sc, "asserted on the command line")
                            : solve(p, grid, sc);
  const std::string stem = opt.infinite ? "infinite" : to_string(sc.init);
  print_stats(out, err, stem, r.stats);
  emit(r.table, stem, &r.stats);

  if (opt.synthesize) {
    if (opt.synthesize->size() != p.state_dim()) throw UsageError("--synthesize: wrong dimension");
    const Trajectory tr = synthesize_feedback(p, r.table, *opt.synthesize, sc);
    std::ostringstream csv;
    csv << "# kruzkov " << version() << '\n' << 't';
    for (std::size_t i = 0; i < p.state_dim(); ++i) csv << ",x" << (i + 1);
    for (std::size_t i = 0; i < p.control_dim(); ++i) csv << ",a" << (i + 1);
    csv << ",cost\n";
    for (const auto& pt : tr.points) {
      csv << num(pt.t);
      for (double c : pt.x) csv << ',' << num(c);
      for (std::size_t i = 0; i < p.control_dim(); ++i) {
        csv << ',' << (pt.a.empty() ? std::string() : num(pt.a[i]));
      }
      csv << ',' << num(pt.cost) << '\n';
    }
    const fs::path path = output_path(cfg, cfg.name + "_trajectory");
    write_text(path, csv.str());
    out << "trajectory cost=" << num(tr.cost()) << " exit_time="
        << (tr.exit_time ? num(*tr.exit_time) : std::string("none")) << '\n';
    out << "wrote " << path.string() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// converge

int cmd_converge(const RunConfig& cfg, const ConvergeOptions& opt, std::ostream& out,
                 std::ostream& err) {
  const Problem& p = cfg.prob();
  const std::string& axis = opt.axis;
  if (axis != "h" && axis != "eps" && axis != "delta" && axis != "T") {
    throw UsageError("--axis must be one of h, eps, delta, T");
  }
  if (opt.values.size() < 2) throw UsageError("--values needs at least two entries");
  const bool inc = std::is_sorted(opt.values.begin(), opt.values.end(), std::less<>());
  const bool dec = std::is_sorted(opt.values.begin(), opt.values.end(), std::greater<>());
  if (!inc && !dec) throw UsageError("--values must be monotone");
  for (double v : opt.values) {
    if (!(v >= 0.0) || (axis != "eps" && !(v > 0.0))) throw UsageError("invalid axis value");
  }
  std::vector<std::vector<double>> probes = opt.probes;
  if (probes.empty()) probes.push_back(default_probe(p.state_dim()));
  for (const auto& x : probes) {
    if (x.size() != p.state_dim()) throw UsageError("probe dimension differs from the state");
  }

  SolverConfig sc = cfg.solver;
  sc.threads = cfg.threads;
  const std::size_t rows = opt.values.size();
  std::vector<std::vector<double>> V(rows, std::vector<double>(probes.size()));
  std::vector<std::vector<double>> ref(rows, std::vector<double>(probes.size(), NAN));
  const ExampleEntry* ex = cfg.example;

  // Row order follows --values; each solve family wants its own ordering.
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto sorted_by = [&](auto cmp) {
    auto o = order;
    std::stable_sort(o.begin(), o.end(),
                     [&](auto a, auto b) { return cmp(opt.values[a], opt.values[b]); });
    return o;
  };

  if (axis == "h") {
    for (std::size_t r = 0; r < rows; ++r) {
      const Grid g = cfg.grid_or_default(opt.values[r]);
      SolverConfig c = sc;
      c.delta_target = g.cell_diagonal();
      c.init = InitRegime::FromAbove;
      const SolveResult res = solve(p, g, c);
      if (!res.stats.converged) err << "warning: h=" << num(opt.values[r]) << " not converged\n";
      for (std::size_t k = 0; k < probes.size(); ++k) {
        V[r][k] = res.table.V_at(probes[k]);
        if (ex && ex->V.known()) ref[r][k] = ex->V(probes[k]);
      }
    }
  } else if (axis == "eps") {
    if (!p.penalty) throw ConfigError("eps axis needs a penalty rho");
    const auto o = sorted_by(std::greater<>());
    SolverConfig c = sc;
    c.eps_ladder.clear();
    for (auto i : o) c.eps_ladder.push_back(opt.values[i]);
    const Grid g = cfg.grid_or_default();
    const LadderResult L = solve_eps_ladder(p, g, c);
    for (std::size_t j = 0; j < o.size(); ++j) {
      for (std::size_t k = 0; k < probes.size(); ++k) {
        V[o[j]][k] = L.tables[j].V_at(probes[k]);
        if (ex && ex->V_eps) ref[o[j]][k] = ex->V_eps(probes[k], L.eps[j]);
      }
    }
  } else if (axis == "delta") {
    const auto o = sorted_by(std::greater<>());
    std::vector<double> deltas;
    for (auto i : o) deltas.push_back(opt.values[i]);
    const Grid g = cfg.grid_or_default();
    const FattenedResult F = fattened_value(p, g, deltas, sc);
    if (F.order_violations) err << "warning: " << F.order_violations << " order violations\n";
    for (std::size_t j = 0; j < o.size(); ++j) {
      for (std::size_t k = 0; k < probes.size(); ++k) {
        V[o[j]][k] = F.tables[j].V_at(probes[k]);
        if (ex && ex->V.known()) ref[o[j]][k] = ex->V(probes[k]);
      }
    }
  } else {
    const auto o = sorted_by(std::less<>());
    std::vector<double> Ts;
    for (auto i : o) Ts.push_back(opt.values[i]);
    const Grid g = cfg.grid_or_default();
    SolverConfig c = sc;
    c.init = InitRegime::FromAbove;
    const auto tables = finite_time_values(p, g, Ts, c);
    const SolveResult limit = solve(p, g, c);
    for (std::size_t j = 0; j < o.size(); ++j) {
      for (std::size_t k = 0; k < probes.size(); ++k) {
        V[o[j]][k] = tables[j].V_at(probes[k]);
        ref[o[j]][k] = limit.table.V_at(probes[k]);
      }
    }
  }

  std::vector<double> error(rows, NAN);
  for (std::size_t r = 0; r < rows; ++r) {
    double e = -1.0;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      if (!std::isnan(ref[r][k])) e = std::max(e, std::abs(V[r][k] - ref[r][k]));
    }
    if (e >= 0.0) error[r] = e;
  }

  std::ostringstream csv;
  csv << "# kruzkov " << version() << '\n' << axis;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    csv << ",V_p" << (k + 1) << ",ref_p" << (k + 1);
  }
  csv << ",error,order\n";
  for (std::size_t r = 0; r < rows; ++r) {
    csv << num(opt.values[r]);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      csv << ',' << num(V[r][k]) << ',' << (std::isnan(ref[r][k]) ? "" : num(ref[r][k]));
    }
    csv << ',' << (std::isnan(error[r]) ? "" : num(error[r])) << ',';
    if (r > 0 && axis != "T" && error[r] > 0 && error[r - 1] > 0 && opt.values[r] > 0 &&
        opt.values[r - 1] > 0) {
      csv << num(std::log(error[r - 1] / error[r]) /
                 std::log(opt.values[r - 1] / opt.values[r]));
    }
    csv << '\n';
  }
  const fs::path path = output_path(cfg, cfg.name + "_converge_" + axis);
  write_text(path, csv.str());
  json side = {{"version", version()}, {"problem", cfg.name}, {"axis", axis},
               {"probes", probes}};
  write_text(path.string() + ".json", side.dump(2) + "\n");

  out << csv.str().substr(csv.str().find('\n') + 1);
  // Least-squares order over all rows with a positive error.
  std::vector<double> lx, ly;
  for (std::size_t r = 0; r < rows; ++r) {
    if (error[r] > 0 && opt.values[r] > 0) {
      lx.push_back(std::log(opt.values[r]));
      ly.push_back(std::log(error[r]));
    }
  }
  if (axis != "T" && lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    out << "fitted_order=" << num(sxx > 0 ? sxy / sxx : NAN) << '\n';
  }
  out << "wrote " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& out,
               std::ostream&) {
  const Problem& p = cfg.prob();
  const std::size_t n = p.state_dim();
  auto parse_x = [&](const std::string& s, const char* what) {
    try {
      return parse(s, n, 0);
    } catch (const ParseError& e) {
      throw UsageError(std::string(what) + ": " + e.what());
    }
  };
  auto parse_s = [&](const std::string& s, const char* what) {
    try {
      return parse_scalar(s);
    } catch (const ParseError& e) {
      throw UsageError(std::string(what) + ": " + e.what());
    }
  };

  std::vector<ConditionSpec> specs;
  auto base = [&](Condition c) {
    ConditionSpec s;
    s.which = c;
    s.samples = opt.samples;
    s.seed = cfg.seed;
    s.k = opt.k;
    if (opt.sigma) s.sigma = *opt.sigma;
    s.penalized = opt.penalized;
    return s;
  };
  if (opt.mrf) {
    ConditionSpec s = base(Condition::MRF);
    s.U = parse_x(*opt.mrf, "--mrf");
    specs.push_back(std::move(s));
  }
  if (opt.sc1) {
    if (!opt.U || !opt.m) throw UsageError("--sc1 requires --U and --m");
    ConditionSpec s = base(Condition::SC1);
    s.U = parse_x(*opt.U, "--U");
    s.m = parse_s(*opt.m, "--m");
    specs.push_back(std::move(s));
  }
  if (opt.sc2) {
    ConditionSpec s = base(Condition::SC2);
    s.c2 = parse_s(*opt.sc2, "--sc2");
    specs.push_back(std::move(s));
  }
  if (opt.cv) specs.push_back(base(Condition::CV));
  if (opt.viability) specs.push_back(base(Condition::Viability));
  for (auto [flag, c] : {std::pair{opt.cff, Condition::CFF}, std::pair{opt.cft, Condition::CFT}}) {
    if (!flag) continue;
    if (!opt.U) throw UsageError(std::string("--") + (c == Condition::CFF ? "cff" : "cft") +
                                 " requires --U");
    ConditionSpec s = base(c);
    s.U = parse_x(*opt.U, "--U");
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw UsageError("no condition selected");

  json reports = json::array();
  bool failed = false;
  for (const auto& s : specs) {
    CheckReport r;
    try {
      r = run_condition(p, s);
    } catch (const InvalidAuxiliaryError& e) {
      throw UsageError(e.what());
    }
    out << to_string(r.condition) << ": " << to_string(r.verdict) << " samples=" << r.samples
        << " margin_min=" << num(r.margin_min);
    if (!r.counterexamples.empty()) out << " worst_x=" << point_label(r.counterexamples[0].x);
    out << '\n';
    failed |= r.verdict == Verdict::Fail;
    reports.push_back(json::parse(r.to_json()));
  }
  const fs::path path = output_path(cfg, cfg.name + "_verify", ".json");
  write_text(path, reports.dump(2) + "\n");
  out << "wrote " << path.string() << '\n';
  return failed ? kVerifyFailed : kOk;
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle(const RunConfig& cfg, const OracleOptions& opt, std::ostream& out,
               std::ostream&) {
  const Problem& p = cfg.prob();
  if (opt.points.empty()) throw UsageError("--point is required");
  OracleConfig oc;
  oc.switches = opt.switches;
  oc.horizon = opt.horizon;
  oc.dt = opt.dt;
  oc.delta_adm = opt.delta_adm;
  oc.restarts = opt.restarts;
  oc.seed = cfg.seed;

  std::ostringstream csv;
  csv << "# kruzkov " << version() << '\n';
  for (std::size_t i = 0; i < p.state_dim(); ++i) csv << 'x' << (i + 1) << ',';
  csv << "V,V_admissible,Vm,Vm_admissible";
  if (p.penalty) csv << ",Veps,Veps_admissible";
  csv << '\n';
  for (const auto& x : opt.points) {
    if (x.size() != p.state_dim()) throw UsageError("point dimension differs from the state");
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    if (std::sqrt(r2) > p.safety_radius()) throw UsageError("point outside the safety box");
    const OracleEstimate v = estimate_V(p, x, oc);
    const OracleEstimate vm = estimate_Vm(p, x, oc);
    for (double c : x) csv << num(c) << ',';
    csv << num(v.value) << ',' << v.admissible << ',' << num(vm.value) << ',' << vm.admissible;
    if (p.penalty) {
      const OracleEstimate ve = estimate_Veps(p, x, opt.eps, oc);
      csv << ',' << num(ve.value) << ',' << ve.admissible;
    }
    csv << '\n';
  }
  const fs::path path = output_path(cfg, cfg.name + "_oracle");
  write_text(path, csv.str());
  out << csv.str().substr(csv.str().find('\n') + 1);
  out << "wrote " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// list-examples

int cmd_list_examples(std::ostream& out) {
  for (const auto& name : examples::names()) {
    const ExampleEntry& e = examples::get(name);
    std::string refs;
    for (auto [label, r] : {std::pair{"V", &e.V}, std::pair{"Vf", &e.Vf}, std::pair{"Vm", &e.Vm}}) {
      if (r->known()) refs += (refs.empty() ? "" : ",") + std::string(label);
    }
    if (e.V_eps) refs += (refs.empty() ? "" : ",") + std::string("Veps");
    if (!e.fixtures.empty()) refs += (refs.empty() ? "" : ",") + std::string("oracle-fixtures");
    std::string conds;
    for (Condition c : e.conditions) conds += (conds.empty() ? "" : ",") + std::string(to_string(c));
    out << std::left << std::setw(6) << name << " n=" << e.problem.state_dim()
        << " m=" << e.problem.control_dim() << " refs=" << (refs.empty() ? "none" : refs)
        << " conditions=" << (conds.empty() ? "none" : conds) << "  " << e.summary << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Command-line parsing

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-Lagrangian solver, oracle and condition checks for exit-time control"};
  // -h would collide with the grid spacing flag --h.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("kruzkov ") + version());

  ProblemSource src;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::optional<double> h, delta, dt, tol, eps;
  std::optional<std::size_t> max_sweeps;
  std::optional<std::string> init, out_of_box;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--example", src.example, "Built-in problem name");
    sub->add_option("--problem", src.inline_json, "Inline problem JSON");
    sub->add_option("--config", src.config_path, "JSON config file");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_option("--h", h, "Uniform grid spacing over the domain box");
    sub->add_option("--delta", delta, "Target fattening radius");
    sub->add_option("--dt", dt, "Time step (0 = CFL limit)");
    sub->add_option("--tol", tol, "Sup-norm stopping tolerance");
    sub->add_option("--max-sweeps", max_sweeps, "Sweep limit");
    sub->add_option("--eps", eps, "Penalty weight");
    sub->add_option("--init", init, "above | below")->check(CLI::IsMember({"above", "below"}));
    sub->add_option("--out-of-box", out_of_box, "one | extrapolate")
        ->check(CLI::IsMember({"one", "extrapolate"}));
  };

  SolveOptions so;
  std::vector<double> synth;
  auto* solve_cmd = app.add_subcommand("solve", "Solve for the value table");
  add_common(solve_cmd);
  solve_cmd->add_flag("--dual", so.dual, "Solve from above and below; report the gap");
  solve_cmd->add_flag("--ladder", so.ladder, "Run the eps ladder");
  solve_cmd->add_flag("--infinite", so.infinite, "Infinite-horizon mode");
  solve_cmd->add_option("--horizon", so.horizon, "Finite horizon T");
  solve_cmd->add_option("--synthesize", synth, "Closed-loop trajectory from this state")
      ->delimiter(',');

  ConvergeOptions co;
  std::vector<std::string> conv_probes;
  auto* conv_cmd = app.add_subcommand("converge", "Convergence study along one axis");
  add_common(conv_cmd);
  conv_cmd->add_option("--axis", co.axis, "h | eps | delta | T")
      ->check(CLI::IsMember({"h", "eps", "delta", "T"}));
  conv_cmd->add_option("--values", co.values, "Axis values")->delimiter(',')->required();
  conv_cmd->add_option("--probe", conv_probes, "Probe point, comma separated (repeatable)");

  VerifyOptions vo;
  auto* ver_cmd = app.add_subcommand("verify", "Check structural conditions");
  add_common(ver_cmd);
  ver_cmd->add_option("--mrf", vo.mrf, "Candidate minimum restraint function U(x)");
  ver_cmd->add_option("--k", vo.k, "MRF constant k");
  ver_cmd->add_option("--sigma", vo.sigma, "Only test U <= sigma");
  ver_cmd->add_flag("--penalized", vo.penalized, "Use l + rho in the MRF inequality");
  ver_cmd->add_flag("--sc1", vo.sc1, "Lyapunov decrease (needs --U and --m)");
  ver_cmd->add_option("--U", vo.U, "Auxiliary U(x)");
  ver_cmd->add_option("--m", vo.m, "Auxiliary m(s)");
  ver_cmd->add_option("--sc2", vo.sc2, "Cost growth with c2(s)");
  ver_cmd->add_flag("--cv", vo.cv, "Convexity of the augmented velocity set");
  ver_cmd->add_flag("--viability", vo.viability, "Viability of T x {0}");
  ver_cmd->add_flag("--cff", vo.cff, "Integral condition on rhohat/ghat (needs --U)");
  ver_cmd->add_flag("--cft", vo.cft, "Integral condition on 1/ghat (needs --U)");
  ver_cmd->add_option("--samples", vo.samples, "Sample count");

  OracleOptions oo;
  std::vector<std::string> points;
  auto* orc_cmd = app.add_subcommand("oracle", "Brute-force value estimates at points");
  add_common(orc_cmd);
  orc_cmd->add_option("--point", points, "State, comma separated (repeatable)")->required();
  orc_cmd->add_option("--K", oo.switches, "Number of control switches");
  orc_cmd->add_option("--horizon", oo.horizon, "Search horizon");
  orc_cmd->add_option("--sim-dt", oo.dt, "Simulation step");
  orc_cmd->add_option("--delta-adm", oo.delta_adm, "Admissibility radius");
  orc_cmd->add_option("--restarts", oo.restarts, "Random restarts");
  orc_cmd->add_option("--oracle-eps", oo.eps, "Penalty weight for the Veps column");

  auto* list_cmd = app.add_subcommand("list-examples", "List built-in problems");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "kruzkov " << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (list_cmd->parsed()) return cmd_list_examples(out);

  RunConfig cfg;
  try {
    cfg = load_run_config(src);
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    cfg.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    if (h) cfg.grid = cfg.grid_or_default(*h);
    if (delta) cfg.solver.delta_target = *delta;
    if (dt) cfg.solver.dt = *dt;
    if (tol) cfg.solver.tol = *tol;
    if (max_sweeps) cfg.solver.max_sweeps = *max_sweeps;
    if (eps) cfg.solver.eps = *eps;
    if (init) cfg.solver.init = *init == "above" ? InitRegime::FromAbove : InitRegime::FromBelow;
    if (out_of_box) cfg.solver.out_of_box = *out_of_box == "one" ? OutOfBox::One
                                                                   : OutOfBox::Extrapolate;
    for (const auto& s : conv_probes) co.probes.push_back(parse_point(s));
    for (const auto& s : points) oo.points.push_back(parse_point(s));
    if (!synth.empty()) so.synthesize = synth;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(cfg, so, out, err);
    if (conv_cmd->parsed()) return cmd_converge(cfg, co, out, err);
    if (ver_cmd->parsed()) return cmd_verify(cfg, vo, out, err);
    if (orc_cmd->parsed()) return cmd_oracle(cfg, oo, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kSolverConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace kruzkov::cli
