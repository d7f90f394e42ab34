#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace reprodiff {

// Closed-form coefficient expressions. Grammar:
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := ('-'|'+')* primary
//   primary := NUMBER | 'x' | 't' | 'pi' | 'q1'..'q9'
//            | ('sin'|'cos'|'exp') '(' expr ')' | '(' expr ')'
// Numbers accept decimal and exponent notation. Whitespace ignored.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text);  // throws ConfigError

  // q: current state values for q1..qn (may be null when unused).
  double eval(double x, double t, const double* q = nullptr, int nq = 0) const;

  bool empty() const { return nodes_.empty(); }
  const std::string& text() const { return text_; }

 private:
  enum class Op : uint8_t { Num, VarX, VarT, VarQ, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };
  struct N {
    Op op;
    double num = 0;      // payload for Num; q-index for VarQ
    int a = -1, b = -1;  // child indices
  };
  std::vector<N> nodes_;
  int root_ = -1;
  std::string text_;

  friend class ExprParser;
};

}  // namespace reprodiff
