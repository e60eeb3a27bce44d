#include "run_config.hpp"

#include <fstream>
#include <sstream>

#include "kruzkov/expr.hpp"

namespace kruzkov::cli {

namespace {

using nlohmann::json;

std::vector<double> vec(const json& j, const char* what) {
  if (!j.is_array()) throw UsageError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw UsageError(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw UsageError(std::string("missing key '") + key + "'");
  return j.at(key);
}

Expr parse_expr(const json& j, std::size_t n, std::size_t m, const std::string& what) {
  if (!j.is_string()) throw UsageError(what + " must be an expression string");
  try {
    return parse(j.get<std::string>(), n, m);
  } catch (const ParseError& e) {
    throw UsageError(what + ": " + e.what());
  }
}

TargetSet target_from_json(const json& j, std::size_t n) {
  const std::string type = at(j, "type").get<std::string>();
  const json& p = j.contains("params") ? j.at("params") : j;
  auto check = [&](const std::vector<double>& v, const char* what) {
    if (v.size() != n) throw UsageError(std::string("target ") + what + " has wrong dimension");
    return v;
  };
  if (type == "point") return TargetSet::point(check(vec(at(p, "center"), "center"), "center"));
  if (type == "ball") {
    return TargetSet::ball(check(vec(at(p, "center"), "center"), "center"),
                           at(p, "radius").get<double>());
  }
  if (type == "box") {
    return TargetSet::box(check(vec(at(p, "lo"), "lo"), "lo"), check(vec(at(p, "hi"), "hi"), "hi"));
  }
  throw UsageError("target type must be point, ball or box");
}

json read_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace

Problem problem_from_json(const json& j) {
  try {
    const auto n = at(j, "n").get<std::size_t>();
    const auto m = at(j, "m").get<std::size_t>();
    if (n == 0 || m == 0) throw UsageError("n and m must be positive");
    const json& jf = at(j, "f");
    if (!jf.is_array() || jf.size() != n) {
      throw UsageError("f must be an array of n expression strings");
    }
    std::vector<Expr> fs;
    for (std::size_t i = 0; i < n; ++i) {
      fs.push_back(parse_expr(jf[i], n, m, "f[" + std::to_string(i) + "]"));
    }
    const Expr l = parse_expr(at(j, "l"), n, m, "l");
    std::optional<CostFunction> rho;
    if (j.contains("rho") && !j.at("rho").is_null()) {
      const Expr r = parse_expr(j.at("rho"), n, m, "rho");
      rho = CostFunction(n, m, [r](auto x, auto a) { return r.eval(x, a); });
    }
    const json& ja = at(j, "A");
    std::vector<double> lo = vec(at(ja, "lo"), "A.lo"), hi = vec(at(ja, "hi"), "A.hi");
    if (lo.size() != m || hi.size() != m) throw UsageError("A bounds must have m entries");
    std::vector<std::size_t> counts(m, 21);
    if (ja.contains("samples")) counts = ja.at("samples").get<std::vector<std::size_t>>();

    std::optional<Box> domain;
    if (j.contains("domain")) {
      domain = Box{vec(at(j.at("domain"), "lo"), "domain.lo"),
                   vec(at(j.at("domain"), "hi"), "domain.hi")};
    } else if (j.contains("grid")) {
      domain = Box{vec(at(j.at("grid"), "lo"), "grid.lo"), vec(at(j.at("grid"), "hi"), "grid.hi")};
    }

    Dynamics f(n, m, [fs](auto x, auto a, auto dx) {
      for (std::size_t i = 0; i < fs.size(); ++i) dx[i] = fs[i].eval(x, a);
    });
    CostFunction lc(n, m, [l](auto x, auto a) { return l.eval(x, a); });
    return Problem(j.value("name", std::string("inline")), std::move(f), std::move(lc),
                   ControlSet(std::move(lo), std::move(hi), std::move(counts)),
                   target_from_json(at(j, "target"), n), std::move(rho), std::move(domain));
  } catch (const json::exception& e) {
    throw UsageError(std::string("problem: ") + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("problem: ") + e.what());
  }
}

void apply_solver_json(const json& j, SolverConfig& cfg) {
  try {
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("max_sweeps")) cfg.max_sweeps = j.at("max_sweeps").get<std::size_t>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
    if (j.contains("eps_ladder")) cfg.eps_ladder = vec(j.at("eps_ladder"), "eps_ladder");
    if (j.contains("delta_target")) cfg.delta_target = j.at("delta_target").get<double>();
    if (j.contains("tol_dom")) cfg.tol_dom = j.at("tol_dom").get<double>();
    if (j.contains("synthesis_horizon")) {
      cfg.synthesis_horizon = j.at("synthesis_horizon").get<double>();
    }
    if (j.contains("init")) {
      const auto s = j.at("init").get<std::string>();
      if (s != "above" && s != "below") throw UsageError("solver.init must be above or below");
      cfg.init = s == "above" ? InitRegime::FromAbove : InitRegime::FromBelow;
    }
    if (j.contains("out_of_box")) {
      const auto s = j.at("out_of_box").get<std::string>();
      if (s != "one" && s != "extrapolate") {
        throw UsageError("solver.out_of_box must be one or extrapolate");
      }
      cfg.out_of_box = s == "one" ? OutOfBox::One : OutOfBox::Extrapolate;
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("solver: ") + e.what());
  }
}

Grid grid_from_json(const json& j) {
  try {
    auto lo = vec(at(j, "lo"), "grid.lo"), hi = vec(at(j, "hi"), "grid.hi");
    if (j.contains("counts")) {
      return Grid(std::move(lo), std::move(hi), j.at("counts").get<std::vector<std::size_t>>());
    }
    return Grid::with_spacing(std::move(lo), std::move(hi), at(j, "h").get<double>());
  } catch (const json::exception& e) {
    throw UsageError(std::string("grid: ") + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("grid: ") + e.what());
  }
}

Grid RunConfig::grid_or_default(double h) const {
  if (h > 0.0) {
    const Box box = grid ? grid->box() : problem->domain ? *problem->domain
                                                         : throw UsageError("no grid box");
    return Grid::with_spacing(box.lo, box.hi, h);
  }
  if (grid) return *grid;
  throw UsageError("no grid given (use a grid block or --h with a domain)");
}

RunConfig load_run_config(const ProblemSource& src) {
  json file;
  if (src.config_path) {
    std::ifstream in(*src.config_path);
    if (!in) throw UsageError("cannot read config file " + *src.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    file = read_json_text(ss.str(), "config file");
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
  }
  const bool file_example = file.contains("example");
  const bool file_problem = file.contains("f");
  const int sources = (src.example ? 1 : 0) + (src.inline_json ? 1 : 0) + (file_example ? 1 : 0) +
                      (file_problem ? 1 : 0);
  if (sources != 1) {
    throw UsageError("exactly one problem source is required (--example, --problem or a "
                     "config file with a problem)");
  }

  RunConfig cfg;
  json body = file;
  std::optional<std::string> example = src.example;
  if (file_example) example = file.at("example").get<std::string>();
  if (example) {
    try {
      cfg.example = &examples::get(*example);
    } catch (const LookupError& e) {
      throw UsageError(e.what());
    }
    cfg.name = cfg.example->name;
    cfg.problem = cfg.example->problem;
    cfg.grid = cfg.example->grid;
    cfg.solver = cfg.example->solver;
  } else {
    if (src.inline_json) {
      json inl = read_json_text(*src.inline_json, "--problem");
      for (auto it = inl.begin(); it != inl.end(); ++it) body[it.key()] = it.value();
    }
    cfg.problem = problem_from_json(body);
    cfg.name = cfg.problem->name;
  }
  if (body.contains("grid")) cfg.grid = grid_from_json(body.at("grid"));
  if (body.contains("solver")) apply_solver_json(body.at("solver"), cfg.solver);
  if (cfg.grid && cfg.grid->dims() != cfg.problem->state_dim()) {
    throw UsageError("grid dimension differs from the state dimension");
  }
  return cfg;
}

}  // namespace kruzkov::cli
