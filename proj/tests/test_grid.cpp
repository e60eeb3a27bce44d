#include <doctest.h>

#include <cmath>
#include <random>

#include "kruzkov/errors.hpp"
#include "kruzkov/grid.hpp"
#include "kruzkov/transform.hpp"

using namespace kruzkov;

TEST_CASE("Kruzkov transform values") {
  CHECK(kruzkov::kruzkov(0.0) == 0.0);
  CHECK(kruzkov::kruzkov(kInfinity) == 1.0);
  CHECK(kruzkov::kruzkov(0.5) == doctest::Approx(0.393469).epsilon(1e-6));
  CHECK(kruzkov::kruzkov(0.5) == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(kruzkov::kruzkov(-1e-3), DomainError);
}

TEST_CASE("inverse transform") {
  CHECK(inv_kruzkov(0.0) == 0.0);
  CHECK(std::isinf(inv_kruzkov(1.0)));
  CHECK(std::isinf(inv_kruzkov(1.0 - 1e-7)));
  CHECK(std::isfinite(inv_kruzkov(1.0 - 1e-7, 1e-9)));
  for (double v : {0.1, 1.0, 5.0}) CHECK(std::abs(inv_kruzkov(kruzkov::kruzkov(v)) - v) <= 1e-12);
  CHECK_THROWS_AS(inv_kruzkov(-0.1), DomainError);
  CHECK_THROWS_AS(inv_kruzkov(1.1), DomainError);
}

TEST_CASE("grid construction and geometry") {
  const Grid g = Grid::with_spacing({-2.0, 0.0}, {2.0, 1.0}, 0.25);
  CHECK(g.dims() == 2);
  CHECK(g.count(0) == 17);
  CHECK(g.count(1) == 5);
  CHECK(g.size() == 85);
  CHECK(g.spacing(0) == doctest::Approx(0.25));
  CHECK(g.cell_diagonal() == doctest::Approx(std::sqrt(2.0) * 0.25));
  CHECK(g.min_spacing() == doctest::Approx(0.25));
  // Last axis fastest.
  CHECK(g.stride(1) == 1);
  CHECK(g.stride(0) == 5);
  const State x = g.node(6);
  CHECK(x[0] == doctest::Approx(-1.75));
  CHECK(x[1] == doctest::Approx(0.25));
  CHECK(g.nearest(x) == 6);
  CHECK(g.nearest(State{10.0, -10.0}) == 80);
  CHECK_THROWS_AS(Grid({0.0}, {1.0}, {1}), ConfigError);
  CHECK_THROWS_AS(Grid({1.0}, {0.0}, {3}), ConfigError);
  CHECK_THROWS_AS(Grid({0.0, 0.0}, {1.0}, {3}), ConfigError);
}

TEST_CASE("multilinear interpolation reproduces multilinear functions") {
  const Grid g({-1.0, 0.0, 2.0}, {1.0, 3.0, 4.0}, {5, 7, 3});
  auto f = [](std::span<const double> x) {
    return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2] + x[0] * x[1] - 0.25 * x[0] * x[1] * x[2];
  };
  std::vector<double> values(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) values[i] = f(g.node(i));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const State x{-1.0 + 2.0 * u(rng), 3.0 * u(rng), 2.0 + 2.0 * u(rng)};
    CHECK(g.interpolate(values, x) == doctest::Approx(f(x)).epsilon(1e-12));
  }
}

TEST_CASE("interpolation outside the box") {
  const Grid g({0.0}, {1.0}, {3});
  const std::vector<double> v{0.0, 0.5, 0.25};
  CHECK(g.interpolate(v, State{1.5}) == 1.0);
  CHECK(g.interpolate(v, State{1.5}, OutOfBox::One, 0.7) == 0.7);
  CHECK(g.interpolate(v, State{1.5}, OutOfBox::Extrapolate) == 0.25);
  CHECK(g.interpolate(v, State{-3.0}, OutOfBox::Extrapolate) == 0.0);
  std::size_t base = 0;
  std::vector<double> frac(1);
  CHECK_FALSE(g.locate(State{1.5}, false, base, frac));
  CHECK(g.locate(State{0.75}, false, base, frac));
  CHECK(base == 1);
  CHECK(frac[0] == doctest::Approx(0.5));
}

TEST_CASE("value tables mask and invert") {
  const Grid g({0.0}, {1.0}, {4});
  ValueTable t(g, {0.0, 0.5, 1.0 - 1e-8, 1.0});
  CHECK(t.in_domain(0));
  CHECK(t.in_domain(1));
  CHECK_FALSE(t.in_domain(2));
  CHECK_FALSE(t.in_domain(3));
  CHECK(t.V(1) == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(t.V(3)));
  CHECK(t.W_at(State{1.0 / 6.0}) == doctest::Approx(0.25));
  CHECK(t.V_at(State{1.0 / 6.0}) == doctest::Approx(-std::log(0.75)));
  t.mutable_values()[3] = 0.2;
  t.refresh_mask();
  CHECK(t.in_domain(3));
  CHECK_THROWS_AS(ValueTable(g, {0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(ValueTable(g, {0.0, 0.5, 1.5, 0.0}), DomainError);
}
