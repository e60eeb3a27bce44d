#pragma once

// Shared helpers for the unit tests.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "kruzkov/examples.hpp"
#include "kruzkov/problem.hpp"

namespace testing {

/// Fresh directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("kruzkov_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const kruzkov::Problem& problem(const char* name) {
  return kruzkov::examples::get(name).problem;
}

/// Un1 data with a user-chosen target and penalty.
inline kruzkov::Problem un1_variant(kruzkov::TargetSet target,
                                    std::optional<kruzkov::CostFunction> rho = std::nullopt) {
  using namespace kruzkov;
  Dynamics f(1, 1, [](auto x, auto a, auto dx) { dx[0] = -x[0] * a[0]; });
  CostFunction l(1, 1, [](auto x, auto) { return std::abs(x[0]); });
  return Problem("un1-variant", f, l, ControlSet({0.0}, {1.0}, {21}), std::move(target),
                 std::move(rho), Box{{-2.0}, {2.0}});
}

/// Exact exit-time value of UneV. Along f = -x a the cost per unit of
/// distance is |x^2 - x| / |x| = |1 - x|, so V(x) = |int_0^x |1 - y| dy|:
/// x - x^2/2 on [0,1], 1/2 + (x-1)^2/2 beyond 1, x^2/2 - x below 0.
inline double unev_exit_value(double x) {
  if (x < 0.0) return -x + 0.5 * x * x;
  if (x <= 1.0) return x - 0.5 * x * x;
  return 0.5 + 0.5 * (x - 1.0) * (x - 1.0);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

}  // namespace testing
