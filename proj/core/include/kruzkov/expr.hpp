#pragma once

// Scalar expression language used to describe dynamics components, costs,
// candidate functions and one-dimensional auxiliary functions from text.
//
// Grammar (whitespace insignificant):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//
//   variable := x1..xn | a1..am | s
//   func     := abs | exp | log | sqrt | sq (one argument), min | max (two)
//
// `s` is reserved for functions of one scalar (c2(s), m(s), ...) and cannot
// be combined with x or a variables in the same expression.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kruzkov/errors.hpp"

namespace kruzkov {

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::string message, std::string expected);

  /// Byte offset into the source.
  std::size_t offset() const { return offset_; }
  /// 1-based column.
  std::size_t column() const { return offset_ + 1; }
  const std::string& message() const { return message_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string message_;
  std::string expected_;
};

class EvalError : public Error {
 public:
  EvalError(std::size_t offset, const std::string& message);
  std::size_t offset() const { return offset_; }
  std::size_t column() const { return offset_ + 1; }

 private:
  std::size_t offset_;
};

class Expr {
 public:
  enum class Op : unsigned char {
    Number, StateVar, ControlVar, ScalarVar,
    Neg, Add, Sub, Mul, Div, Pow,
    Abs, Exp, Log, Sqrt, Sq, Min, Max,
  };

  struct Node {
    Op op;
    double value = 0.0;      // Number
    std::size_t index = 0;   // variable index (0-based)
    int lhs = -1;
    int rhs = -1;
    std::size_t offset = 0;  // byte offset in the source
  };

  Expr() = default;

  std::size_t state_dim() const { return impl_ ? impl_->n : 0; }
  std::size_t control_dim() const { return impl_ ? impl_->m : 0; }
  bool uses_scalar() const { return impl_ && impl_->uses_scalar; }
  bool empty() const { return !impl_; }
  const std::string& source() const;

  double eval(std::span<const double> x, std::span<const double> a,
              std::optional<double> s = std::nullopt) const;
  /// Convenience for expressions in `s` only.
  double eval_scalar(double s) const { return eval({}, {}, s); }

  /// Canonical text with minimal parentheses; parse(to_string()) reproduces
  /// the same tree.
  std::string to_string() const;

  std::span<const Node> nodes() const { return impl_->nodes; }
  int root() const { return impl_->root; }

 private:
  struct Impl {
    std::vector<Node> nodes;
    int root = -1;
    std::size_t n = 0;
    std::size_t m = 0;
    bool uses_scalar = false;
    std::string source;
  };

  explicit Expr(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  double eval_node(int i, std::span<const double> x, std::span<const double> a, double s) const;

  std::shared_ptr<const Impl> impl_;

  friend Expr parse(std::string_view src, std::size_t n, std::size_t m);
};

/// Parses `src` over state variables x1..xn and control variables a1..am.
Expr parse(std::string_view src, std::size_t n, std::size_t m);

/// Parses a function of the reserved scalar variable `s`.
inline Expr parse_scalar(std::string_view src) { return parse(src, 0, 0); }

double eval(const Expr& e, std::span<const double> x, std::span<const double> a,
            std::optional<double> s = std::nullopt);

}  // namespace kruzkov
