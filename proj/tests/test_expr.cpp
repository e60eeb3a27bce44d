#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "kruzkov/expr.hpp"

using namespace kruzkov;

namespace {

double ev(const char* src, std::vector<double> x, std::vector<double> a = {}) {
  return parse(src, x.size(), a.size()).eval(x, a);
}

std::string literal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TEST_CASE("parse and evaluate the basic cases") {
  CHECK(parse("abs(x1)", 1, 1).eval(std::vector<double>{-2.0}, std::vector<double>{0.0}) == 2.0);
  CHECK(ev("x1^2 + a1*x2", {2.0, 3.0}, {0.5}) == 5.5);
  CHECK(ev("abs(x1^2 - x1) + a1*0", {1.0}, {0.3}) == 0.0);
  CHECK(ev("min(a1, 1 - a1)", {}, {0.3}) == doctest::Approx(0.3));
  CHECK(ev("exp(-x1)", {0.0}) == 1.0);
  CHECK(ev("sq(x1) + sq(x2)", {3.0, 4.0}) == 25.0);
}

TEST_CASE("operator precedence and associativity") {
  CHECK(ev("2^3^2", {}) == 512.0);
  CHECK(ev("-2^2", {}) == -4.0);
  CHECK(ev("(-2)^2", {}) == 4.0);
  CHECK(ev("2^-1", {}) == 0.5);
  CHECK(ev("1 - 2 - 3", {}) == -4.0);
  CHECK(ev("8 / 4 / 2", {}) == 1.0);
  CHECK(ev("2 + 3 * 4", {}) == 14.0);
  CHECK(ev("2 * 3 ^ 2", {}) == 18.0);
  CHECK(ev("--3", {}) == 3.0);
  CHECK(ev("1 + -3 * 2", {}) == -5.0);
  CHECK(ev("max(1, 2) * min(3, -4)", {}) == -8.0);
  CHECK(ev(" \t x1 *\n 2 ", {1.5}) == 3.0);
  CHECK(ev("1e-3 * 1E3 + .5", {}) == 1.5);
  CHECK(ev("sqrt(16) + log(exp(2))", {}) == doctest::Approx(6.0));
}

TEST_CASE("the reserved scalar variable") {
  const Expr c2 = parse_scalar("s/2");
  CHECK(c2.uses_scalar());
  CHECK(c2.eval_scalar(3.0) == 1.5);
  CHECK(parse_scalar("sq(s)/4").eval_scalar(2.0) == 1.0);
  CHECK(parse_scalar("0.5").eval_scalar(7.0) == 0.5);
  CHECK_THROWS_AS(parse("s + x1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("s * a1", 0, 1), ParseError);
  CHECK_THROWS_AS(c2.eval({}, {}), EvalError);
}

TEST_CASE("parse errors carry offset, column and a hint") {
  auto expect_error = [](const char* src, std::size_t n, std::size_t m, std::size_t offset) {
    try {
      parse(src, n, m);
      FAIL("no error for " << src);
    } catch (const ParseError& e) {
      CHECK(e.offset() == offset);
      CHECK(e.column() == offset + 1);
      CHECK(e.offset() <= std::strlen(src));
      CHECK_FALSE(std::string(e.what()).empty());
    }
  };
  expect_error("x1 +", 1, 0, 4);
  expect_error("foo(x1)", 1, 0, 0);
  expect_error("x1 + x3", 2, 0, 5);
  expect_error("a2", 1, 1, 0);
  expect_error("x0", 1, 0, 0);
  expect_error("(x1", 1, 0, 3);
  expect_error("x1 x1", 1, 0, 3);
  expect_error("min(x1)", 1, 0, 6);
  expect_error("abs(x1, 2)", 1, 0, 6);
  expect_error("2 $ 3", 0, 0, 2);
  CHECK_THROWS_AS(parse("", 1, 1), ParseError);
  CHECK_THROWS_AS(parse("   ", 1, 1), ParseError);
}

TEST_CASE("evaluation domain errors point at the subexpression") {
  auto expect_error = [](const char* src, double x, std::size_t column) {
    try {
      parse(src, 1, 0).eval(std::vector<double>{x}, {});
      FAIL("no error for " << src);
    } catch (const EvalError& e) {
      CHECK(e.column() == column);
    }
  };
  expect_error("log(x1)", -1.0, 1);
  expect_error("log(x1)", 0.0, 1);
  expect_error("1 + sqrt(x1)", -0.5, 5);
  expect_error("2 / x1", 0.0, 3);
  CHECK(parse("sqrt(x1)", 1, 0).eval(std::vector<double>{0.0}, {}) == 0.0);
}

TEST_CASE("dimension mismatches at evaluation") {
  const Expr e = parse("x1 + x2", 2, 0);
  CHECK_THROWS_AS(e.eval(std::vector<double>{1.0}, {}), Error);
}

// Fixed-point property of the canonical printer on a golden corpus.
TEST_CASE("pretty-print round trip on the golden corpus") {
  const std::vector<const char*> corpus = {
      "abs(x1)",
      "x1^2 + a1*x2",
      "abs(x1^2 - x1) + a1*0",
      "min(a1, 1 - a1)",
      "exp(-x1)",
      "sq(x1) + sq(x2)",
      "-x1*a1",
      "-x1 - x1*a1",
      "(sq(x1)+sq(x2))/4",
      "abs(x1-sq(x1)/2)+abs(x1)",
      "sq(x1)+sq(a1)",
      "-x1+a1",
      "s/2",
      "sq(s)/4",
      "2^3^2",
      "(2^3)^2",
      "-2^2",
      "(-2)^2",
      "1 - (2 - 3)",
      "(1 - 2) - 3",
      "8 / (4 / 2)",
      "x1 / (x2 * a1)",
      "--x1",
      "-(x1 + x2)",
      "max(x1, min(x2, 0.5)) * 1e-3",
      "log(1 + exp(-abs(x1)))",
      "sqrt(sq(x1) + sq(x2) + 1e-12)",
      "x1 * (a1 + a2) ^ 2",
      "(x1 + 1)^(1/3) + 2.5e10",
      "a1 - -a2 * -(x2 ^ -2)",
  };
  CHECK(corpus.size() == 30);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (const char* src : corpus) {
    CAPTURE(src);
    const std::string text = src;
    const bool scalar = text.rfind("s/", 0) == 0 || text.find("(s)") != std::string::npos;
    const std::size_t n = scalar ? 0 : 2, m = scalar ? 0 : 2;
    const Expr e1 = parse(src, n, m);
    const std::string p1 = e1.to_string();
    const Expr e2 = parse(p1, n, m);
    const std::string p2 = e2.to_string();
    CHECK(p1 == p2);
    CHECK(e2.nodes().size() == e1.nodes().size());
    for (int i = 0; i < 5; ++i) {
      const std::vector<double> x{u(rng), u(rng)}, a{u(rng), u(rng)};
      const std::optional<double> s = scalar ? std::optional<double>(u(rng)) : std::nullopt;
      const auto xs = scalar ? std::span<const double>() : std::span<const double>(x);
      const auto as = scalar ? std::span<const double>() : std::span<const double>(a);
      const double v1 = e1.eval(xs, as, s), v2 = e2.eval(xs, as, s);
      CHECK(std::memcmp(&v1, &v2, sizeof v1) == 0);
    }
  }
}

TEST_CASE("precedence fuzz: a+b*c and friends against direct arithmetic") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const std::string A = literal(a), B = literal(b), C = literal(c);
    // Negative literals are written as unary minus applied to the magnitude.
    const double e1 = parse(A + "+" + B + "*" + C, 0, 0).eval({}, {});
    CHECK(e1 == a + (b * c));
    const double e2 = parse(A + "*" + B + "-" + C, 0, 0).eval({}, {});
    CHECK(e2 == (a * b) - c);
    const double e3 = parse(A + "-" + B + "/" + C, 0, 0).eval({}, {});
    CHECK(e3 == a - (b / c));
  }
}

TEST_CASE("evaluation is bit-for-bit deterministic") {
  const Expr e = parse("log(1 + exp(-abs(x1))) * sqrt(sq(x2) + 1) / (a1 + 3)", 2, 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{u(rng), u(rng)}, a{u(rng)};
    const double v1 = e.eval(x, a), v2 = e.eval(x, a), v3 = eval(e, x, a);
    CHECK(std::memcmp(&v1, &v2, sizeof v1) == 0);
    CHECK(std::memcmp(&v1, &v3, sizeof v1) == 0);
  }
}

TEST_CASE("source text is kept") {
  CHECK(parse(" x1 + 1 ", 1, 0).source() == " x1 + 1 ");
  CHECK(parse("x1", 1, 0).state_dim() == 1);
  CHECK(parse("a1", 0, 2).control_dim() == 2);
}
