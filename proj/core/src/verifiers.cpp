#include "kruzkov/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "kruzkov/errors.hpp"
#include "random.hpp"

namespace kruzkov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Box region_of(const Problem& p, const std::optional<Box>& region) {
  if (region) return *region;
  if (p.domain) return *p.domain;
  throw ConfigError("verifier: no sampling region and the problem has no domain box");
}

// Draws points in `box`, alternating uniform samples with log-radial samples
// near the target so that small distances are represented.
class Sampler {
 public:
  Sampler(const Problem& p, Box box, std::uint64_t seed, double r_min)
      : p_(p), box_(std::move(box)), rng_(seed) {
    r_max_ = box_.diameter();
    r_min_ = std::max(r_min, 1e-9 * r_max_);
  }

  template <class Accept>
  std::vector<State> draw(std::size_t count, Accept accept) {
    std::vector<State> out;
    out.reserve(count);
    const std::size_t budget = 50 * count + 100;
    for (std::size_t tries = 0; tries < budget && out.size() < count; ++tries) {
      State x = (tries % 2 == 0) ? uniform() : near_target();
      if (box_.contains(x) && accept(x)) out.push_back(std::move(x));
    }
    return out;
  }

  State uniform() {
    State x(box_.dims());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng_.uniform(box_.lo[i], box_.hi[i]);
    return x;
  }

  State near_target() {
    const std::size_t n = box_.dims();
    State dir(n);
    double len = 0.0;
    while (len < 1e-12) {
      for (double& c : dir) c = rng_.normal();
      len = norm(dir);
    }
    for (double& c : dir) c /= len;
    const double r = std::exp(rng_.uniform(std::log(r_min_), std::log(r_max_)));
    auto y = p_.target.point_at_distance(dir, r);
    return y ? *y : uniform();
  }

  detail::Rng& rng() { return rng_; }

 private:
  const Problem& p_;
  Box box_;
  detail::Rng rng_;
  double r_min_ = 0.0;
  double r_max_ = 1.0;
};

State central_gradient(const StateFunction& U, std::span<const double> x, double h) {
  State y(x.begin(), x.end());
  State g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double up = U(y);
    y[i] = x[i] - h;
    const double down = U(y);
    y[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Collects counterexamples and keeps the worst ones.
struct Collector {
  std::vector<std::pair<double, Counterexample>> items;

  void add(double severity, Counterexample c) { items.emplace_back(severity, std::move(c)); }

  void finish(CheckReport& r, std::size_t cap) {
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (items.size() > cap) items.resize(cap);
    for (auto& it : items) r.counterexamples.push_back(std::move(it.second));
  }
};

CheckReport start_report(Condition c, const ConditionSpec& spec) {
  CheckReport r;
  r.condition = c;
  r.seed = spec.seed;
  r.margin_min = kInf;
  return r;
}

void conclude(CheckReport& r, bool failed) {
  if (failed) {
    r.verdict = Verdict::Fail;
  } else if (r.samples == 0) {
    r.verdict = Verdict::Inconclusive;
    r.notes.emplace_back("no admissible samples in the region");
  } else {
    r.verdict = Verdict::Pass;
  }
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "+inf" : "-inf";
}

}  // namespace

const char* to_string(Condition c) {
  switch (c) {
    case Condition::SC1: return "SC1";
    case Condition::SC2: return "SC2";
    case Condition::CV: return "CV";
    case Condition::CFF: return "CFF";
    case Condition::CFT: return "CFT";
    case Condition::Viability: return "viability";
    case Condition::MRF: return "MRF";
    case Condition::LACL: return "LACL";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(PowerLawVerdict v) {
  switch (v) {
    case PowerLawVerdict::CFT: return "CFT";
    case PowerLawVerdict::CFFOnly: return "CFF_only";
    case PowerLawVerdict::Neither: return "neither";
  }
  return "?";
}

std::string CheckReport::to_json() const {
  nlohmann::json j;
  j["condition"] = to_string(condition);
  j["verdict"] = to_string(verdict);
  j["samples"] = samples;
  j["seed"] = seed;
  j["margin_min"] = number(margin_min);
  auto arr = nlohmann::json::array();
  for (const auto& c : counterexamples) {
    nlohmann::json e;
    e["x"] = c.x;
    e["a"] = c.a;
    e["lhs"] = number(c.lhs);
    e["rhs"] = number(c.rhs);
    if (!c.witness.empty()) e["witness"] = c.witness;
    arr.push_back(std::move(e));
  }
  j["counterexamples"] = std::move(arr);
  if (!notes.empty()) j["notes"] = notes;
  return j.dump(2);
}

StateFunction state_function(const Expr& e) {
  if (e.uses_scalar()) {
    throw ConfigError("auxiliary function must depend on the state only");
  }
  return [e](std::span<const double> x) { return e.eval(x, {}); };
}

LevelFunction level_function(const Expr& e) {
  return [e](double s) { return e.eval_scalar(s); };
}

// ---------------------------------------------------------------------------
// MRF

CheckReport check_mrf(const Problem& p, const MRFCandidate& cand, const ConditionSpec& spec) {
  if (!cand.U) throw ConfigError("MRF check: no candidate function");
  if (!(cand.k > 0.0)) throw ConfigError("MRF check: k must be positive");
  if (cand.penalized && !p.penalty) throw ConfigError("MRF check: penalized form needs rho");
  const Box box = region_of(p, cand.omega ? cand.omega : spec.region);
  const double step = cand.gradient_step;
  const double excl = std::max(spec.exclusion_radius, 2.0 * step);
  const std::size_t n = p.state_dim();

  Sampler sampler(p, box, spec.seed, excl);
  auto xs = sampler.draw(spec.samples, [&](const State& x) {
    if (!(distance(p, x) > excl)) return false;
    const double u = cand.U(x);
    if (!std::isfinite(u)) throw EvalError(0, "MRF check: U is not finite at a sample");
    return u <= cand.sigma;
  });

  CheckReport report = start_report(spec.which == Condition::LACL ? Condition::LACL
                                                                  : Condition::MRF,
                                    spec);
  report.samples = xs.size();
  const auto controls = p.controls.samples();
  const std::size_t jitters = std::min<std::size_t>(8, 2 * n * n);

  // Gradients at x and at jittered neighbours; a large spread marks a kink.
  std::vector<std::vector<State>> grads(xs.size());
  std::vector<double> spread(xs.size(), 0.0);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    grads[s].push_back(central_gradient(cand.U, xs[s], step));
    for (std::size_t j = 0; j < jitters; ++j) {
      State y = xs[s];
      for (std::size_t i = 0; i < n; ++i) y[i] += step * sampler.rng().uniform(-1.0, 1.0);
      State g = central_gradient(cand.U, y, step);
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(g[i] - grads[s][0][i]));
      spread[s] = std::max(spread[s], d);
      grads[s].push_back(std::move(g));
    }
  }
  double median = 0.0;
  if (!spread.empty()) {
    std::vector<double> tmp = spread;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<long>(tmp.size() / 2), tmp.end());
    median = tmp[tmp.size() / 2];
  }

  Collector bad;
  State fx(n);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const bool kink = spread[s] > 10.0 * median && spread[s] > 1e-8;
    const std::size_t count = kink ? grads[s].size() : 1;
    for (std::size_t gi = 0; gi < count; ++gi) {
      const State& pg = grads[s][gi];
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t c = 0; c < controls.size(); ++c) {
        p.dynamics(xs[s], controls[c], fx);
        double cost = p.running_cost(xs[s], controls[c]);
        if (cand.penalized) cost += (*p.penalty)(xs[s], controls[c]);
        const double v = dot(pg, fx) + cand.k * cost;
        if (v < best) {
          best = v;
          arg = c;
        }
      }
      report.margin_min = std::min(report.margin_min, -best);
      if (!(best < -spec.margin_floor)) {
        bad.add(best + spec.margin_floor,
                Counterexample{xs[s], controls[arg], best, -spec.margin_floor, pg});
      }
    }
  }
  const bool failed = !bad.items.empty();
  bad.finish(report, spec.max_counterexamples);
  conclude(report, failed);
  return report;
}

// ---------------------------------------------------------------------------
// SC1, SC2

CheckReport check_sc1(const Problem& p, const StateFunction& U, const LevelFunction& m,
                      const ConditionSpec& spec) {
  const Box box = region_of(p, spec.region);
  const double step = spec.gradient_step;
  const double excl = std::max(spec.exclusion_radius, 2.0 * step);
  Sampler sampler(p, box, spec.seed, excl);
  auto xs = sampler.draw(spec.samples, [&](const State& x) { return distance(p, x) > excl; });

  CheckReport report = start_report(Condition::SC1, spec);
  report.samples = xs.size();
  const auto controls = p.controls.samples();
  Collector bad;
  State fx(p.state_dim());
  for (const State& x : xs) {
    const double d = distance(p, x);
    const double mv = m(d);
    if (!(mv > 0.0)) {
      throw InvalidAuxiliaryError("SC1: m(s) must be positive for s > 0 (m(" +
                                  std::to_string(d) + ") = " + std::to_string(mv) + ")");
    }
    const State g = central_gradient(U, x, step);
    double worst = -kInf;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < controls.size(); ++c) {
      p.dynamics(x, controls[c], fx);
      const double v = dot(g, fx);
      if (v > worst) {
        worst = v;
        arg = c;
      }
    }
    report.margin_min = std::min(report.margin_min, -mv - worst);
    if (worst > -mv + spec.tolerance) {
      bad.add(worst + mv, Counterexample{x, controls[arg], worst, -mv, g});
    }
  }
  const bool failed = !bad.items.empty();
  bad.finish(report, spec.max_counterexamples);
  conclude(report, failed);
  return report;
}

CheckReport check_sc2(const Problem& p, const LevelFunction& c2, const ConditionSpec& spec) {
  const Box box = region_of(p, spec.region);
  const double excl = spec.exclusion_radius;
  Sampler sampler(p, box, spec.seed, std::max(excl, 1e-9));
  auto xs = sampler.draw(spec.samples, [&](const State& x) { return distance(p, x) > excl; });

  // c2 must be positive and nondecreasing on the sampled distances.
  std::vector<double> ds;
  ds.reserve(xs.size());
  for (const State& x : xs) ds.push_back(distance(p, x));
  std::vector<double> sorted = ds;
  std::sort(sorted.begin(), sorted.end());
  double prev = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double v = c2(sorted[i]);
    if (!(v > 0.0)) {
      throw InvalidAuxiliaryError("SC2: c2(s) must be positive for s > 0 (c2(" +
                                  std::to_string(sorted[i]) + ") = " + std::to_string(v) + ")");
    }
    if (i > 0 && v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      throw InvalidAuxiliaryError("SC2: c2 must be nondecreasing (decreases near s = " +
                                  std::to_string(sorted[i]) + ")");
    }
    prev = v;
  }

  CheckReport report = start_report(Condition::SC2, spec);
  report.samples = xs.size();
  const auto controls = p.controls.samples();
  Collector bad;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const double rhs = c2(ds[s]);
    double low = kInf;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < controls.size(); ++c) {
      const double v = p.running_cost(xs[s], controls[c]);
      if (v < low) {
        low = v;
        arg = c;
      }
    }
    report.margin_min = std::min(report.margin_min, low - rhs);
    if (low < rhs - spec.tolerance) bad.add(rhs - low, Counterexample{xs[s], controls[arg], low, rhs, {}});
  }
  const bool failed = !bad.items.empty();
  bad.finish(report, spec.max_counterexamples);
  conclude(report, failed);
  return report;
}

// ---------------------------------------------------------------------------
// CV

CheckReport check_cv(const Problem& p, const ConditionSpec& spec) {
  const Box box = region_of(p, spec.region);
  Sampler sampler(p, box, spec.seed, 1e-6);
  const std::size_t nx = std::max<std::size_t>(1, std::min<std::size_t>(spec.samples, 256));
  auto xs = sampler.draw(nx, [](const State&) { return true; });

  CheckReport report = start_report(Condition::CV, spec);
  report.samples = xs.size();
  const auto controls = p.controls.samples();
  const std::size_t na = controls.size();
  const std::size_t n = p.state_dim();
  const bool all_pairs = na * na <= 4096;
  constexpr std::size_t kRandomPairs = 512;

  Collector bad;
  std::vector<State> pts(na, State(n + 1));
  for (const State& x : xs) {
    double lmin = kInf, lmax = -kInf;
    for (std::size_t c = 0; c < na; ++c) {
      p.dynamics(x, controls[c], std::span(pts[c].data(), n));
      pts[c][n] = p.running_cost(x, controls[c]);
      lmin = std::min(lmin, pts[c][n]);
      lmax = std::max(lmax, pts[c][n]);
    }
    // Resolution of the discretized set: largest nearest-neighbour gap.
    double gap = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      double nn = kInf;
      for (std::size_t j = 0; j < na; ++j) {
        if (i == j) continue;
        double d2 = 0.0;
        for (std::size_t k = 0; k <= n; ++k) d2 += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
        nn = std::min(nn, d2);
      }
      if (std::isfinite(nn)) gap = std::max(gap, std::sqrt(nn));
    }
    const double tol = 0.5 * gap * (1.0 + 1e-6) + spec.cv_tolerance;
    const double span = lmax - lmin + 1.0;

    auto test = [&](std::size_t i, std::size_t j, double gi, double gj) {
      State mid(n + 1);
      for (std::size_t k = 0; k < n; ++k) mid[k] = 0.5 * (pts[i][k] + pts[j][k]);
      mid[n] = 0.5 * (gi + gj);
      // Distance to the union of vertical rays {(f_c, gamma): gamma >= l_c}.
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t c = 0; c < na; ++c) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) d2 += (pts[c][k] - mid[k]) * (pts[c][k] - mid[k]);
        const double up = std::max(0.0, pts[c][n] - mid[n]);
        d2 += up * up;
        if (d2 < best) {
          best = d2;
          arg = c;
        }
      }
      const double dist = std::sqrt(best);
      report.margin_min = std::min(report.margin_min, tol - dist);
      if (dist > tol) bad.add(dist - tol, Counterexample{x, controls[arg], dist, tol, mid});
    };

    if (all_pairs) {
      for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = i + 1; j < na; ++j) test(i, j, pts[i][n], pts[j][n]);
      }
    } else {
      for (std::size_t t = 0; t < kRandomPairs; ++t) {
        const std::size_t i = sampler.rng().index(na), j = sampler.rng().index(na);
        test(i, j, pts[i][n], pts[j][n]);
      }
    }
    // Points strictly inside the epigraph.
    for (std::size_t t = 0; t < 16 && na > 1; ++t) {
      const std::size_t i = sampler.rng().index(na), j = sampler.rng().index(na);
      test(i, j, pts[i][n] + sampler.rng().uniform(0.0, span),
           pts[j][n] + sampler.rng().uniform(0.0, span));
    }
  }
  const bool failed = !bad.items.empty();
  bad.finish(report, spec.max_counterexamples);
  conclude(report, failed);
  return report;
}

// ---------------------------------------------------------------------------
// Viability of T x {0}

CheckReport check_viability(const Problem& p, const ConditionSpec& spec) {
  CheckReport report = start_report(Condition::Viability, spec);
  const TargetSet& T = p.target;
  detail::Rng rng(spec.seed);
  std::vector<State> xs;
  switch (T.kind()) {
    case TargetSet::Kind::Point:
      xs.push_back(T.center());
      break;
    case TargetSet::Kind::Ball:
    case TargetSet::Kind::Box: {
      const std::size_t count = std::min<std::size_t>(spec.samples, 64);
      const std::size_t n = T.dims();
      for (std::size_t s = 0; s < count; ++s) {
        State x(n);
        if (T.kind() == TargetSet::Kind::Box) {
          for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(T.box_lo()[i], T.box_hi()[i]);
        } else {
          State dir(n);
          for (double& c : dir) c = rng.normal();
          const double len = std::max(norm(dir), 1e-300);
          const double r = T.radius() * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
          for (std::size_t i = 0; i < n; ++i) x[i] = T.center()[i] + r * dir[i] / len;
        }
        xs.push_back(std::move(x));
      }
      break;
    }
    case TargetSet::Kind::Custom:
      if (T.anchor()) xs.push_back(*T.anchor());
      break;
  }
  report.samples = xs.size();
  if (xs.empty()) {
    report.verdict = Verdict::Inconclusive;
    report.notes.emplace_back("custom target without anchor: no target samples");
    return report;
  }

  const double tol = spec.viability_tolerance;
  const double dt = spec.viability_dt;
  const auto controls = p.controls.samples();
  Collector bad;
  for (const State& x : xs) {
    bool ok = false;
    double best_l = kInf;
    std::size_t best_a = 0;
    double best_slack = -kInf;
    for (std::size_t c = 0; c < controls.size() && !ok; ++c) {
      const double l = p.running_cost(x, controls[c]);
      if (l < best_l) {
        best_l = l;
        best_a = c;
      }
      if (l > tol) continue;
      State y = x;
      double dmax = distance(p, y);
      for (int k = 0; k < 5 && dmax <= tol; ++k) {
        y = integrate_step(p, y, controls[c], dt);
        dmax = std::max(dmax, distance(p, y));
      }
      best_slack = std::max(best_slack, tol - dmax);
      if (dmax <= tol) ok = true;
    }
    report.margin_min = std::min(report.margin_min, ok ? best_slack : tol - best_l);
    if (!ok) bad.add(best_l - tol, Counterexample{x, controls[best_a], best_l, tol, {}});
  }
  const bool failed = !bad.items.empty();
  bad.finish(report, spec.max_counterexamples);
  conclude(report, failed);
  return report;
}

// ---------------------------------------------------------------------------
// CFF / CFT

PowerLawVerdict classify_cff_cft(double gamma, double beta1, double beta2, double r) {
  if (!(gamma > 0.0)) throw DomainError("classify_cff_cft: gamma must be positive");
  if (beta1 < 0.0 || beta2 < 0.0) throw DomainError("classify_cff_cft: exponents must be >= 0");
  if (beta1 < gamma) return PowerLawVerdict::CFT;
  if (r * beta2 > beta1 - gamma) return PowerLawVerdict::CFFOnly;
  return PowerLawVerdict::Neither;
}

namespace {

// Least-squares slope/intercept of log y against log s.
std::pair<double, double> loglog_fit(const std::vector<double>& s, const std::vector<double>& y) {
  const double n = static_cast<double>(s.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double lx = std::log(s[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  const double slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  return {slope, (sy - slope * sx) / n};
}

// Trapezoid over (s_i, y_i) plus the fitted tail on (0, s_0].
std::pair<double, bool> power_tail_integral(const std::vector<double>& s,
                                            const std::vector<double>& y, std::size_t tail,
                                            double tol, double& exponent) {
  double body = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) body += 0.5 * (y[i] + y[i - 1]) * (s[i] - s[i - 1]);
  std::vector<double> ts, ty;
  for (std::size_t i = 0; i < s.size() && ts.size() < tail; ++i) {
    if (y[i] > 0.0 && std::isfinite(y[i])) {
      ts.push_back(s[i]);
      ty.push_back(y[i]);
    }
  }
  if (ts.size() < 2) {
    // Integrand vanishes near 0.
    exponent = kInf;
    return {body, true};
  }
  const auto [e, c] = loglog_fit(ts, ty);
  exponent = e;
  if (!(e > -1.0 + tol)) return {kInf, false};
  const double tail_int = std::exp(c) * std::pow(s.front(), e + 1.0) / (e + 1.0);
  return {body + tail_int, true};
}

}  // namespace

GHatEstimate estimate_ghat_rhohat(const Problem& p, const StateFunction& U, double k,
                                  double sigma, std::span<const double> s_grid,
                                  const GHatOptions& opts) {
  if (!(k > 0.0)) throw ConfigError("ghat estimate: k must be positive");
  if (!(sigma > 0.0)) throw ConfigError("ghat estimate: sigma must be positive");
  if (s_grid.size() < 2) throw ConfigError("ghat estimate: s_grid needs at least 2 points");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    if (!(s_grid[i] > 0.0) || (i > 0 && !(s_grid[i] > s_grid[i - 1]))) {
      throw ConfigError("ghat estimate: s_grid must be positive and increasing");
    }
  }
  const Box box = region_of(p, opts.region);
  const std::optional<CostFunction> rho = opts.rho ? opts.rho : p.penalty;

  Sampler sampler(p, box, opts.seed, 1e-12);
  auto xs = sampler.draw(opts.samples, [&](const State& x) {
    const double u = U(x);
    return distance(p, x) > 0.0 && u > 0.0 && u <= sigma;
  });
  const std::size_t ns = xs.size();
  const auto controls = p.controls.samples();
  const std::size_t na = controls.size();
  const std::size_t n = p.state_dim();

  // Per sample: U, the Hamiltonian part <p,f> + k l for each control, and
  // the MRF slack.
  std::vector<double> u(ns), slack(ns);
  std::vector<double> ham(ns * na), lval(ns * na);
  State fx(n);
  for (std::size_t s = 0; s < ns; ++s) {
    u[s] = U(xs[s]);
    const double h = std::min(opts.gradient_step, 0.25 * distance(p, xs[s]));
    const State g = central_gradient(U, xs[s], h);
    double best = kInf;
    for (std::size_t c = 0; c < na; ++c) {
      p.dynamics(xs[s], controls[c], fx);
      lval[s * na + c] = p.running_cost(xs[s], controls[c]);
      ham[s * na + c] = dot(g, fx) + k * lval[s * na + c];
      best = std::min(best, ham[s * na + c]);
    }
    slack[s] = -best;
  }

  // m(U(x)): supplied, or half the smallest slack on {U >= U(x)}.
  std::vector<double> mval(ns);
  if (opts.m) {
    for (std::size_t s = 0; s < ns; ++s) mval[s] = (*opts.m)(u[s]);
  } else {
    std::vector<std::size_t> order(ns);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return u[a] > u[b]; });
    double run = kInf;
    for (std::size_t idx : order) {
      run = std::min(run, slack[idx]);
      mval[idx] = 0.5 * run;
    }
  }

  // A(x) = {a : <p,f> + k l + m(U) <= 0}.
  std::vector<std::uint8_t> in_A(ns * na, 0);
  std::vector<std::uint8_t> valid(ns, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    if (!(mval[s] > 0.0)) continue;
    for (std::size_t c = 0; c < na; ++c) {
      if (ham[s * na + c] + mval[s] <= 0.0) {
        in_A[s * na + c] = 1;
        valid[s] = 1;
      }
    }
  }

  GHatEstimate est;
  const std::size_t nb = s_grid.size();
  est.s.assign(s_grid.begin(), s_grid.end());
  est.ghat.assign(nb, kInf);
  est.rhohat.assign(nb, 0.0);
  est.usable.assign(nb, false);
  est.has_rho = rho.has_value();

  std::vector<std::uint8_t> union_A(na);
  for (std::size_t b = 0; b < nb; ++b) {
    const double lo = s_grid[b];
    const double hi = b + 1 < nb ? s_grid[b + 1] : sigma;
    bool any_in_band = false, bad_band = false;
    for (std::size_t s = 0; s < ns; ++s) {
      if (u[s] >= lo && u[s] < std::max(hi, lo * (1 + 1e-12))) {
        any_in_band = true;
        if (!valid[s]) bad_band = true;
      }
    }
    est.usable[b] = any_in_band && !bad_band;

    // ghat(s) over U^{-1}([s, sigma]) with controls from the union of A(x).
    std::fill(union_A.begin(), union_A.end(), 0);
    for (std::size_t s = 0; s < ns; ++s) {
      if (u[s] < lo || !valid[s]) continue;
      for (std::size_t c = 0; c < na; ++c) union_A[c] |= in_A[s * na + c];
    }
    double g = kInf;
    for (std::size_t s = 0; s < ns; ++s) {
      if (u[s] < lo || !valid[s]) continue;
      for (std::size_t c = 0; c < na; ++c) {
        if (union_A[c]) g = std::min(g, k * lval[s * na + c] + mval[s]);
      }
    }
    est.ghat[b] = g;

    // rhohat(s) over U^{-1}((0, s]).
    if (rho) {
      std::fill(union_A.begin(), union_A.end(), 0);
      for (std::size_t s = 0; s < ns; ++s) {
        if (u[s] > lo || !valid[s]) continue;
        for (std::size_t c = 0; c < na; ++c) union_A[c] |= in_A[s * na + c];
      }
      double r = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        if (u[s] > lo || !valid[s]) continue;
        for (std::size_t c = 0; c < na; ++c) {
          if (union_A[c]) r = std::max(r, (*rho)(xs[s], controls[c]));
        }
      }
      est.rhohat[b] = r;
    }
  }

  std::vector<double> ss, inv_g, ratio;
  for (std::size_t b = 0; b < nb; ++b) {
    if (!est.usable[b] || !std::isfinite(est.ghat[b]) || !(est.ghat[b] > 0.0)) continue;
    ss.push_back(est.s[b]);
    inv_g.push_back(1.0 / est.ghat[b]);
    ratio.push_back(est.rhohat[b] / est.ghat[b]);
  }
  est.usable_bands = ss.size();
  if (ss.size() < 4) {
    est.status = Verdict::Inconclusive;
    return est;
  }

  double e_inv = 0.0;
  auto [i1, c1] = power_tail_integral(ss, inv_g, opts.tail_bands, opts.exponent_tol, e_inv);
  est.ghat_exponent = -e_inv;
  est.int_inv_ghat = i1;
  est.inv_ghat_converges = c1;
  if (rho) {
    double e_ratio = 0.0;
    auto [i2, c2] = power_tail_integral(ss, ratio, opts.tail_bands, opts.exponent_tol, e_ratio);
    est.ratio_exponent = e_ratio;
    est.int_rho_over_ghat = i2;
    est.rho_over_ghat_converges = c2;
  }
  est.status = Verdict::Pass;
  if (est.inv_ghat_converges) {
    est.verdict = PowerLawVerdict::CFT;
  } else if (rho && est.rho_over_ghat_converges) {
    est.verdict = PowerLawVerdict::CFFOnly;
  } else {
    est.verdict = PowerLawVerdict::Neither;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Dispatcher

CheckReport run_condition(const Problem& p, const ConditionSpec& spec) {
  auto need = [&](const std::optional<Expr>& e, const char* what) -> const Expr& {
    if (!e) {
      throw ConfigError(std::string("condition ") + to_string(spec.which) +
                        " requires the auxiliary function " + what);
    }
    return *e;
  };
  switch (spec.which) {
    case Condition::MRF:
    case Condition::LACL: {
      MRFCandidate cand;
      cand.U = state_function(need(spec.U, "U"));
      cand.k = spec.k;
      cand.sigma = spec.sigma;
      cand.gradient_step = spec.gradient_step;
      cand.penalized = spec.penalized;
      return check_mrf(p, cand, spec);
    }
    case Condition::SC1:
      return check_sc1(p, state_function(need(spec.U, "U")), level_function(need(spec.m, "m")),
                       spec);
    case Condition::SC2:
      return check_sc2(p, level_function(need(spec.c2, "c2")), spec);
    case Condition::CV:
      return check_cv(p, spec);
    case Condition::Viability:
      return check_viability(p, spec);
    case Condition::CFF:
    case Condition::CFT: {
      const StateFunction U = state_function(need(spec.U, "U"));
      const Box box = region_of(p, spec.region);
      double sigma = spec.sigma;
      if (!std::isfinite(sigma)) {
        Sampler sampler(p, box, spec.seed, 1e-9);
        sigma = 0.0;
        for (const State& x : sampler.draw(512, [](const State&) { return true; })) {
          sigma = std::max(sigma, U(x));
        }
      }
      std::vector<double> s_grid(40);
      for (std::size_t i = 0; i < s_grid.size(); ++i) {
        s_grid[i] = sigma * std::pow(10.0, -6.0 + 6.0 * static_cast<double>(i) /
                                                   static_cast<double>(s_grid.size()));
      }
      GHatOptions opts;
      opts.region = box;
      opts.seed = spec.seed;
      opts.samples = std::max<std::size_t>(spec.samples, 1000);
      const GHatEstimate est = estimate_ghat_rhohat(p, U, spec.k, sigma, s_grid, opts);
      CheckReport report = start_report(spec.which, spec);
      report.samples = opts.samples;
      report.notes.push_back("usable bands: " + std::to_string(est.usable_bands));
      if (est.status == Verdict::Inconclusive) {
        report.verdict = Verdict::Inconclusive;
        report.margin_min = 0.0;
        return report;
      }
      if (spec.which == Condition::CFT) {
        report.verdict = est.inv_ghat_converges ? Verdict::Pass : Verdict::Fail;
        report.margin_min = 1.0 - est.ghat_exponent - opts.exponent_tol;
        report.notes.push_back("ghat exponent: " + std::to_string(est.ghat_exponent));
      } else {
        if (!est.has_rho) throw ConfigError("condition CFF requires a penalty rho");
        report.verdict = est.rho_over_ghat_converges ? Verdict::Pass : Verdict::Fail;
        report.margin_min = est.ratio_exponent + 1.0 - opts.exponent_tol;
        report.notes.push_back("rhohat/ghat exponent: " + std::to_string(est.ratio_exponent));
      }
      return report;
    }
  }
  throw ConfigError("unknown condition");
}

}  // namespace kruzkov
