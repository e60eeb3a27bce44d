#include "kruzkov/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "kruzkov/errors.hpp"
#include "random.hpp"
#include "rk4.hpp"

namespace kruzkov {

void OracleConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("oracle: dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("oracle: horizon must be positive");
  if (horizon / dt < static_cast<double>(switches + 1) - 1e-9) {
    throw ConfigError("oracle: horizon / dt must be at least K + 1");
  }
  if (!(delta_adm > 0.0)) throw ConfigError("oracle: delta_adm must be positive");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One rollout, with the integrals of l and rho kept apart so that every
// l + eps rho cost can be read off the same trajectory.
struct Eval {
  double L = 0.0;
  double R = 0.0;
  std::optional<double> exit;
  /// False when the rollout was capped or diverged.
  bool valid = true;
};

enum class Guide { V, Vm, Veps1 };

double objective(Guide g, const Eval& e) {
  if (!e.valid) return kInf;
  switch (g) {
    case Guide::V: return e.exit ? e.L : kInf;
    case Guide::Vm: return e.L;
    case Guide::Veps1: return e.exit ? e.L + e.R : kInf;
  }
  return kInf;
}

class Search {
 public:
  Search(const Problem& p, std::span<const double> x, const OracleConfig& cfg)
      : p_(p), x_(x.begin(), x.end()), cfg_(cfg), rng_(cfg.seed), work_(p.state_dim()) {
    cfg_.validate();
    if (x_.size() != p.state_dim()) throw ConfigError("oracle: state dimension mismatch");
    const ControlSet cs =
        cfg.control_samples.empty() ? p.controls : p.controls.resampled(cfg.control_samples);
    controls_ = cs.samples();
    for (std::size_t i = 0; i < cs.dims(); ++i) steps_.push_back(cs.spacing(i));
    set_ = cs;
    guides_ = {Guide::V, Guide::Vm};
    if (p.penalty) guides_.push_back(Guide::Veps1);
    incumbent_.assign(guides_.size(), kInf);
  }

  void run() {
    for (const Control& a : controls_) evaluate(ControlSchedule::constant(a));
    if (cfg_.switches == 0) return;

    for (std::size_t g = 0; g < guides_.size(); ++g) {
      const std::size_t n_const = controls_.size();
      double best = kInf;
      std::size_t arg = n_const;
      for (std::size_t i = 0; i < n_const; ++i) {
        const double v = objective(guides_[g], pool_[i].second);
        if (v < best) {
          best = v;
          arg = i;
        }
      }
      if (arg < n_const) {
        descend(spread(std::vector<Control>(cfg_.switches + 1, controls_[arg])), guides_[g]);
      }
      for (std::size_t r = 0; r < cfg_.restarts; ++r) {
        std::vector<Control> seg(cfg_.switches + 1);
        for (auto& c : seg) c = controls_[rng_.index(controls_.size())];
        descend(spread(seg), guides_[g]);
      }
    }
  }

  const std::vector<std::pair<ControlSchedule, Eval>>& pool() const { return pool_; }

 private:
  // Switch times t_i = H (2^i - 1) / (2^{K+1} - 1).
  ControlSchedule spread(std::vector<Control> seg) const {
    const std::size_t K = cfg_.switches;
    const double denom = std::ldexp(1.0, static_cast<int>(K + 1)) - 1.0;
    std::vector<ControlSchedule::Segment> out;
    double prev = 0.0;
    for (std::size_t i = 0; i <= K; ++i) {
      if (i == K) {
        out.push_back({kInf, std::move(seg[i])});
      } else {
        const double t = cfg_.horizon * (std::ldexp(1.0, static_cast<int>(i + 1)) - 1.0) / denom;
        out.push_back({t - prev, std::move(seg[i])});
        prev = t;
      }
    }
    return ControlSchedule(std::move(out));
  }

  double cap() const {
    double c = 0.0;
    for (double v : incumbent_) c = std::max(c, v);
    return c;
  }

  Eval simulate(const ControlSchedule& s, double cost_cap) {
    Eval e;
    const double dt = cfg_.dt;
    const auto steps = static_cast<std::size_t>(std::ceil(cfg_.horizon / dt - 1e-9));
    const double safety = p_.safety_radius();
    State y = x_;
    if (p_.target.distance(y) <= cfg_.delta_adm) {
      e.exit = 0.0;
      return e;
    }
    auto rho = [&](const State& z, const Control& a) {
      return p_.penalty ? (*p_.penalty)(z, a) : 0.0;
    };
    try {
      for (std::size_t k = 0; k < steps; ++k) {
        const Control& a = s.at(static_cast<double>(k) * dt);
        const double l0 = p_.running_cost(y, a);
        const double r0 = rho(y, a);
        detail::rk4_inplace(p_.dynamics, y, a, dt, work_);
        if (norm(y) > safety) {
          e.valid = false;
          return e;
        }
        e.L += 0.5 * dt * (l0 + p_.running_cost(y, a));
        e.R += 0.5 * dt * (r0 + rho(y, a));
        if (p_.target.distance(y) <= cfg_.delta_adm) {
          e.exit = static_cast<double>(k + 1) * dt;
          return e;
        }
        if (e.L > cost_cap) {
          e.valid = false;
          return e;
        }
      }
    } catch (const IntegrationError&) {
      e.valid = false;
    }
    return e;
  }

  const Eval& evaluate(ControlSchedule s) {
    Eval e = simulate(s, cap());
    for (std::size_t g = 0; g < guides_.size(); ++g) {
      incumbent_[g] = std::min(incumbent_[g], objective(guides_[g], e));
    }
    pool_.emplace_back(std::move(s), e);
    return pool_.back().second;
  }

  void descend(ControlSchedule start, Guide g) {
    std::vector<ControlSchedule::Segment> cur = start.segments();
    double best = objective(g, evaluate(start));
    auto attempt = [&](std::vector<ControlSchedule::Segment> cand) {
      const double v = objective(g, evaluate(ControlSchedule(cand)));
      if (v < best) {
        best = v;
        cur = std::move(cand);
        return true;
      }
      return false;
    };

    for (std::size_t round = 0; round < cfg_.refine_rounds; ++round) {
      bool improved = false;
      for (std::size_t i = 0; i < cur.size(); ++i) {
        for (const Control& c : controls_) {
          if (c == cur[i].control) continue;
          auto cand = cur;
          cand[i].control = c;
          improved |= attempt(std::move(cand));
        }
        for (std::size_t axis = 0; axis < steps_.size(); ++axis) {
          if (steps_[axis] <= 0.0) continue;
          for (double f : {0.5, -0.5, 0.25, -0.25}) {
            auto cand = cur;
            Control a = cand[i].control;
            a[axis] += f * steps_[axis];
            cand[i].control = set_->clamp(a);
            if (cand[i].control == cur[i].control) continue;
            improved |= attempt(std::move(cand));
          }
        }
      }
      // Move the switch between segments i and i+1.
      for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
        for (double f : {0.5, -0.5, 0.25, -0.25, 0.1, -0.1}) {
          auto cand = cur;
          const bool last = i + 2 == cur.size();
          double used = 0.0;
          for (std::size_t j = 0; j + 1 < cur.size(); ++j) used += cur[j].duration;
          const double room = last ? cfg_.horizon - used : cur[i + 1].duration;
          const double shift = f > 0 ? f * room : f * cur[i].duration;
          if (shift == 0.0) continue;
          cand[i].duration += shift;
          if (!last) cand[i + 1].duration -= shift;
          if (cand[i].duration < 0.0 || (!last && cand[i + 1].duration < 0.0)) continue;
          improved |= attempt(std::move(cand));
        }
      }
      if (!improved) break;
    }
  }

  const Problem& p_;
  State x_;
  OracleConfig cfg_;
  detail::Rng rng_;
  detail::Workspace work_;
  std::vector<Control> controls_;
  std::vector<double> steps_;
  std::optional<ControlSet> set_;
  std::vector<Guide> guides_;
  std::vector<double> incumbent_;
  std::vector<std::pair<ControlSchedule, Eval>> pool_;
};

template <class Score>
OracleEstimate pick(const Problem& p, std::span<const double> x, const OracleConfig& cfg,
                    Score score) {
  OracleEstimate out;
  if (p.target.distance(x) <= cfg.delta_adm) {
    cfg.validate();
    out.value = 0.0;
    out.schedule = ControlSchedule::constant(p.controls.samples().front());
    out.admissible = true;
    out.exit_time = 0.0;
    return out;
  }
  Search search(p, x, cfg);
  search.run();
  const auto& pool = search.pool();
  out.evaluations = pool.size();
  const std::pair<ControlSchedule, Eval>* best = nullptr;
  for (const auto& entry : pool) {
    const double v = score(entry.second);
    if (v < out.value) {
      out.value = v;
      best = &entry;
    }
  }
  if (best) {
    out.schedule = best->first;
    out.exit_time = best->second.exit;
    out.admissible = best->second.exit.has_value();
  }
  return out;
}

}  // namespace

OracleEstimate estimate_V(const Problem& p, std::span<const double> x, const OracleConfig& cfg) {
  return pick(p, x, cfg, [](const Eval& e) { return e.valid && e.exit ? e.L : kInf; });
}

OracleEstimate estimate_Vm(const Problem& p, std::span<const double> x, const OracleConfig& cfg) {
  return pick(p, x, cfg, [](const Eval& e) { return e.valid ? e.L : kInf; });
}

OracleEstimate estimate_Veps(const Problem& p, std::span<const double> x, double eps,
                             const OracleConfig& cfg) {
  if (!p.penalty) throw ConfigError("estimate_Veps: the problem has no penalty rho");
  if (!(eps >= 0.0)) throw ConfigError("estimate_Veps: eps must be nonnegative");
  return pick(p, x, cfg,
              [eps](const Eval& e) { return e.valid && e.exit ? e.L + eps * e.R : kInf; });
}

OracleEstimate estimate_VT(const Problem& p, std::span<const double> x, double T_max,
                           const OracleConfig& cfg) {
  if (!(T_max > 0.0) || T_max > cfg.horizon * (1.0 + 1e-12)) {
    throw ConfigError("estimate_VT: T_max must lie in (0, horizon]");
  }
  const double limit = T_max + 1e-9 * cfg.dt;
  return pick(p, x, cfg, [limit](const Eval& e) {
    return e.valid && e.exit && *e.exit <= limit ? e.L : kInf;
  });
}

}  // namespace kruzkov
