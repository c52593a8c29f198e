#include "affmech/expr.hpp"

#include <cctype>
#include <cmath>

namespace affmech {
namespace {

std::string caret_message(const std::string& msg, const std::string& src, size_t pos) {
  std::string out = "parse error at column " + std::to_string(pos + 1) + ": " + msg + "\n  " +
                    src + "\n  ";
  out.append(pos, ' ');
  out += '^';
  return out;
}

}  // namespace

ExprError::ExprError(const std::string& msg, const std::string& src, size_t pos)
    : std::runtime_error(caret_message(msg, src, pos)), position(pos) {}

class ExprParser {
 public:
  ExprParser(const std::string& text, const std::vector<std::string>& vars, Expr& out)
      : text_(text), vars_(vars), out_(out) {}

  void run() {
    out_.src_ = text_;
    out_.root_ = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
  }

 private:
  const std::string& text_;
  const std::vector<std::string>& vars_;
  Expr& out_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprError(msg, text_, std::min(pos_, text_.size()));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  int add(Expr::Node n) {
    out_.nodes_.push_back(n);
    return static_cast<int>(out_.nodes_.size() - 1);
  }

  int parse_sum() {
    int lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = add({Expr::Op::add, 0.0, -1, lhs, parse_term()});
      else if (eat('-'))
        lhs = add({Expr::Op::sub, 0.0, -1, lhs, parse_term()});
      else
        return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      if (eat('*'))
        lhs = add({Expr::Op::mul, 0.0, -1, lhs, parse_factor()});
      else if (eat('/'))
        lhs = add({Expr::Op::div, 0.0, -1, lhs, parse_factor()});
      else
        return lhs;
    }
  }

  // Power binds tighter than unary minus on its left, and associates right.
  int parse_factor() {
    skip_ws();
    if (eat('-')) return add({Expr::Op::neg, 0.0, -1, parse_factor(), -1});
    int base = parse_primary();
    if (eat('^')) return add({Expr::Op::pow, 0.0, -1, base, parse_factor()});
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_sum();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const size_t start = pos_;
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text_.substr(start), &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ = start + used;
    return add({Expr::Op::constant, v, -1, -1, -1});
  }

  int parse_ident() {
    const size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      Expr::Op op;
      if (name == "sin")
        op = Expr::Op::sin;
      else if (name == "cos")
        op = Expr::Op::cos;
      else if (name == "exp")
        op = Expr::Op::exp;
      else {
        pos_ = start;
        fail("unknown function '" + name + "'");
      }
      ++pos_;  // '('
      const int arg = parse_sum();
      if (!eat(')')) fail("expected ')'");
      return add({op, 0.0, -1, arg, -1});
    }
    for (size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name)
        return add({Expr::Op::variable, 0.0, static_cast<int>(i), -1, -1});
    pos_ = start;
    fail("unknown variable '" + name + "'");
  }
};

Expr Expr::parse(const std::string& text, const std::vector<std::string>& vars) {
  Expr e;
  ExprParser(text, vars, e).run();
  return e;
}

double Expr::eval_node(int id, const Vec& values) const {
  const Node& n = nodes_[id];
  switch (n.op) {
    case Op::constant:
      return n.value;
    case Op::variable:
      return values[n.slot];
    case Op::add:
      return eval_node(n.lhs, values) + eval_node(n.rhs, values);
    case Op::sub:
      return eval_node(n.lhs, values) - eval_node(n.rhs, values);
    case Op::mul:
      return eval_node(n.lhs, values) * eval_node(n.rhs, values);
    case Op::div:
      return eval_node(n.lhs, values) / eval_node(n.rhs, values);
    case Op::pow:
      return std::pow(eval_node(n.lhs, values), eval_node(n.rhs, values));
    case Op::neg:
      return -eval_node(n.lhs, values);
    case Op::sin:
      return std::sin(eval_node(n.lhs, values));
    case Op::cos:
      return std::cos(eval_node(n.lhs, values));
    case Op::exp:
      return std::exp(eval_node(n.lhs, values));
  }
  return 0.0;
}

double Expr::eval(const Vec& values) const { return eval_node(root_, values); }

ScalarField expr_field(const std::string& text, const std::vector<std::string>& vars) {
  const Expr e = Expr::parse(text, vars);
  return ScalarField::from_value([e](const Vec& v) { return e.eval(v); });
}

}  // namespace affmech
