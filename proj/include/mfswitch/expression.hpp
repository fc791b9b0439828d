#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfc {

// Arithmetic expression in the variables t and s.  Supported syntax:
// numbers, t, s, + - * / ^ (right-associative power), unary minus,
// parentheses, and the functions sin, cos, exp.
//
// Compiled once into a flat postfix program; evaluation is allocation-free.
class Expression {
 public:
  Expression() = default;

  // Throws ExpressionError on any syntax problem.
  static Expression parse(const std::string& source);

  double eval(double t, double s) const;
  const std::string& source() const { return source_; }
  bool empty() const { return code_.empty(); }

 private:
  enum class Op : uint8_t { PushConst, PushT, PushS, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

  std::string source_;
  std::vector<Op> code_;
  std::vector<double> consts_;

  friend class ExpressionParser;
};

struct ExpressionError : std::runtime_error {
  explicit ExpressionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfc
