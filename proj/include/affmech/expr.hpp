#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "affmech/field.hpp"

namespace affmech {

/// Parse failure with the offending position; what() carries the source line
/// and a caret marker under the bad column.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& msg, const std::string& src, size_t pos);
  size_t position;
};

/// Arithmetic expression over named variables: literals, identifiers,
/// + - * / ^ (right-associative power), unary minus, parentheses, and the
/// functions sin, cos, exp. Variable slots follow the order of `vars`.
class Expr {
 public:
  static Expr parse(const std::string& text, const std::vector<std::string>& vars);

  double eval(const Vec& values) const;
  const std::string& source() const { return src_; }

 private:
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp };
  struct Node {
    Op op;
    double value = 0.0;  // constant
    int slot = -1;       // variable
    int lhs = -1, rhs = -1;
  };
  std::vector<Node> nodes_;
  int root_ = -1;
  std::string src_;

  double eval_node(int id, const Vec& values) const;
  friend class ExprParser;
};

/// Field of a packed coordinate vector backed by a parsed expression
/// (finite-difference derivatives).
ScalarField expr_field(const std::string& text, const std::vector<std::string>& vars);

}  // namespace affmech
