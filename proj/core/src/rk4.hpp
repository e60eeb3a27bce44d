#pragma once

#include <cmath>
#include <span>

#include "kruzkov/errors.hpp"
#include "kruzkov/problem.hpp"

namespace kruzkov::detail {

struct Workspace {
  explicit Workspace(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
  State k1, k2, k3, k4, tmp;
};

inline void check_finite(std::span<const double> v, std::span<const double> at) {
  for (double c : v) {
    if (!std::isfinite(c)) {
      throw IntegrationError("non-finite dynamics evaluation", State(at.begin(), at.end()));
    }
  }
}

// y <- y + RK4 increment.
inline void rk4_inplace(const Dynamics& f, std::span<double> y, std::span<const double> a, double dt,
                 Workspace& w) {
  const std::size_t n = y.size();
  f(y, a, w.k1);
  check_finite(w.k1, y);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k1[i];
  f(w.tmp, a, w.k2);
  check_finite(w.k2, w.tmp);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * dt * w.k2[i];
  f(w.tmp, a, w.k3);
  check_finite(w.k3, w.tmp);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + dt * w.k3[i];
  f(w.tmp, a, w.k4);
  check_finite(w.k4, w.tmp);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += dt / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
  }
}

}  // namespace kruzkov::detail
