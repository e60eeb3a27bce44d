#include "kruzkov/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>

namespace kruzkov {

ParseError::ParseError(std::size_t offset, std::string message, std::string expected)
    : Error("parse error at column " + std::to_string(offset + 1) + ": " + message +
            (expected.empty() ? "" : " (expected " + expected + ")")),
      offset_(offset),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

EvalError::EvalError(std::size_t offset, const std::string& message)
    : Error("evaluation error at column " + std::to_string(offset + 1) + ": " + message),
      offset_(offset) {}

namespace {

using Op = Expr::Op;
using Node = Expr::Node;

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"abs", Op::Abs, 1}, {"exp", Op::Exp, 1},  {"log", Op::Log, 1},  {"sqrt", Op::Sqrt, 1},
    {"sq", Op::Sq, 1},   {"min", Op::Min, 2},  {"max", Op::Max, 2},
};

class Parser {
 public:
  Parser(std::string_view src, std::size_t n, std::size_t m) : src_(src), n_(n), m_(m) {}

  std::vector<Node> nodes;
  bool uses_scalar = false;
  bool uses_xa = false;

  int parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(pos_, "empty expression", "an expression");
    const int root = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) {
      throw ParseError(pos_, std::string("unexpected '") + src_[pos_] + "'",
                       "operator or end of input");
    }
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Node node) {
    nodes.push_back(node);
    return static_cast<int>(nodes.size() - 1);
  }

  int binary(Op op, int lhs, int rhs, std::size_t offset) {
    Node node{op};
    node.lhs = lhs;
    node.rhs = rhs;
    node.offset = offset;
    return add(node);
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, parse_term(), at);
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, parse_term(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary(), at);
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, parse_unary(), at);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) {
      Node node{Op::Neg};
      node.lhs = parse_unary();
      node.offset = at;
      return add(node);
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) return binary(Op::Pow, base, parse_unary(), at);
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(pos_, "unexpected end of input", "an operand");
    const char c = src_[pos_];
    const std::size_t at = pos_;
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      if (!accept(')')) throw ParseError(pos_, "unbalanced parenthesis", "')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
        ++end;
      }
      const std::string_view ident = src_.substr(pos_, end - pos_);
      pos_ = end;
      return parse_identifier(ident, at);
    }
    throw ParseError(pos_, std::string("unexpected '") + c + "'", "an operand");
  }

  int parse_number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    };
    digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      digits();
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
        end = e;
        digits();
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + at, src_.data() + end, value);
    if (ec != std::errc() || ptr != src_.data() + end) {
      throw ParseError(at, "malformed number", "a numeric literal");
    }
    pos_ = end;
    Node node{Op::Number};
    node.value = value;
    node.offset = at;
    return add(node);
  }

  int parse_identifier(std::string_view ident, std::size_t at) {
    for (const auto& f : kFunctions) {
      if (f.name != ident) continue;
      if (!accept('(')) throw ParseError(pos_, "function '" + std::string(ident) + "'", "'('");
      Node node{f.op};
      node.offset = at;
      node.lhs = parse_expr();
      if (f.arity == 2) {
        if (!accept(',')) throw ParseError(pos_, "missing second argument", "','");
        node.rhs = parse_expr();
      }
      if (!accept(')')) {
        throw ParseError(pos_, "bad argument list for '" + std::string(ident) + "'", "')'");
      }
      return add(node);
    }
    if (ident == "s") {
      if (uses_xa) throw ParseError(at, "variable 's' cannot be mixed with x/a variables", "");
      uses_scalar = true;
      Node node{Op::ScalarVar};
      node.offset = at;
      return add(node);
    }
    if ((ident[0] == 'x' || ident[0] == 'a') && ident.size() > 1) {
      std::size_t index = 0;
      const auto [ptr, ec] =
          std::from_chars(ident.data() + 1, ident.data() + ident.size(), index);
      if (ec == std::errc() && ptr == ident.data() + ident.size()) {
        const bool state = ident[0] == 'x';
        const std::size_t limit = state ? n_ : m_;
        if (index < 1 || index > limit) {
          throw ParseError(at,
                           "variable '" + std::string(ident) + "' out of range (declared " +
                               std::to_string(limit) + ")",
                           std::string(state ? "x1..x" : "a1..a") + std::to_string(limit));
        }
        if (uses_scalar) {
          throw ParseError(at, "variable 's' cannot be mixed with x/a variables", "");
        }
        uses_xa = true;
        Node node{state ? Op::StateVar : Op::ControlVar};
        node.index = index - 1;
        node.offset = at;
        return add(node);
      }
    }
    throw ParseError(at, "unknown identifier '" + std::string(ident) + "'",
                     "a variable or function name");
  }

  std::string_view src_;
  std::size_t n_;
  std::size_t m_;
  std::size_t pos_ = 0;
};

// Precedence levels for printing.
int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print(std::span<const Node> nodes, int i, std::string& out) {
  const Node& node = nodes[static_cast<std::size_t>(i)];
  auto child = [&](int c, bool parens) {
    if (parens) out += '(';
    print(nodes, c, out);
    if (parens) out += ')';
  };
  auto prec_of = [&](int c) { return precedence(nodes[static_cast<std::size_t>(c)].op); };
  switch (node.op) {
    case Op::Number:
      out += format_number(node.value);
      return;
    case Op::StateVar:
      out += 'x' + std::to_string(node.index + 1);
      return;
    case Op::ControlVar:
      out += 'a' + std::to_string(node.index + 1);
      return;
    case Op::ScalarVar:
      out += 's';
      return;
    case Op::Neg:
      out += '-';
      child(node.lhs, prec_of(node.lhs) < precedence(Op::Neg));
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(node.op);
      child(node.lhs, prec_of(node.lhs) < p);
      out += node.op == Op::Add ? " + " : node.op == Op::Sub ? " - " : node.op == Op::Mul ? "*" : "/";
      child(node.rhs, prec_of(node.rhs) <= p);
      return;
    }
    case Op::Pow:
      child(node.lhs, prec_of(node.lhs) <= precedence(Op::Pow));
      out += '^';
      child(node.rhs, prec_of(node.rhs) < precedence(Op::Pow));
      return;
    default:
      break;
  }
  for (const auto& f : kFunctions) {
    if (f.op != node.op) continue;
    out += f.name;
    out += '(';
    print(nodes, node.lhs, out);
    if (f.arity == 2) {
      out += ", ";
      print(nodes, node.rhs, out);
    }
    out += ')';
    return;
  }
}

}  // namespace

Expr parse(std::string_view src, std::size_t n, std::size_t m) {
  Parser parser(src, n, m);
  const int root = parser.parse_all();
  auto impl = std::make_shared<Expr::Impl>();
  impl->nodes = std::move(parser.nodes);
  impl->root = root;
  impl->n = n;
  impl->m = m;
  impl->uses_scalar = parser.uses_scalar;
  impl->source = std::string(src);
  return Expr(std::move(impl));
}

const std::string& Expr::source() const {
  static const std::string empty;
  return impl_ ? impl_->source : empty;
}

std::string Expr::to_string() const {
  std::string out;
  if (impl_) print(impl_->nodes, impl_->root, out);
  return out;
}

double Expr::eval(std::span<const double> x, std::span<const double> a,
                  std::optional<double> s) const {
  if (!impl_) throw EvalError(0, "empty expression");
  if (x.size() < impl_->n || a.size() < impl_->m) {
    throw EvalError(0, "argument dimensions do not match the declared (n, m)");
  }
  if (impl_->uses_scalar && !s) throw EvalError(0, "expression uses 's' but no value was given");
  return eval_node(impl_->root, x, a, s.value_or(0.0));
}

double Expr::eval_node(int i, std::span<const double> x, std::span<const double> a,
                       double s) const {
  const Node& node = impl_->nodes[static_cast<std::size_t>(i)];
  auto L = [&] { return eval_node(node.lhs, x, a, s); };
  auto R = [&] { return eval_node(node.rhs, x, a, s); };
  switch (node.op) {
    case Op::Number:
      return node.value;
    case Op::StateVar:
      return x[node.index];
    case Op::ControlVar:
      return a[node.index];
    case Op::ScalarVar:
      return s;
    case Op::Neg:
      return -L();
    case Op::Add:
      return L() + R();
    case Op::Sub:
      return L() - R();
    case Op::Mul:
      return L() * R();
    case Op::Div: {
      const double num = L();
      const double den = R();
      if (den == 0.0) throw EvalError(node.offset, "division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double base = L();
      const double expo = R();
      const double v = std::pow(base, expo);
      if (std::isnan(v) && !std::isnan(base) && !std::isnan(expo)) {
        throw EvalError(node.offset, "negative base with non-integer exponent");
      }
      if (base == 0.0 && expo < 0.0) throw EvalError(node.offset, "zero to a negative power");
      return v;
    }
    case Op::Abs:
      return std::abs(L());
    case Op::Exp:
      return std::exp(L());
    case Op::Log: {
      const double v = L();
      if (!(v > 0.0)) throw EvalError(node.offset, "log of a nonpositive number");
      return std::log(v);
    }
    case Op::Sqrt: {
      const double v = L();
      if (v < 0.0) throw EvalError(node.offset, "sqrt of a negative number");
      return std::sqrt(v);
    }
    case Op::Sq: {
      const double v = L();
      return v * v;
    }
    case Op::Min:
      return std::min(L(), R());
    case Op::Max:
      return std::max(L(), R());
  }
  return 0.0;
}

double eval(const Expr& e, std::span<const double> x, std::span<const double> a,
            std::optional<double> s) {
  return e.eval(x, a, s);
}

}  // namespace kruzkov
