#include "reprodiff/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "reprodiff/errors.hpp"

namespace reprodiff {

class ExprParser {
 public:
  ExprParser(const std::string& s, Expr& out) : s_(s), out_(out) {}

  void run() {
    out_.text_ = s_;
    out_.root_ = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
  }

 private:
  const std::string& s_;
  Expr& out_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("expression parse error at position " + std::to_string(pos_) + " in \"" +
                      s_ + "\": " + why);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Expr::Op op, double num = 0, int a = -1, int b = -1) {
    out_.nodes_.push_back({op, num, a, b});
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = add(Expr::Op::Add, 0, lhs, parse_term());
      else if (eat('-'))
        lhs = add(Expr::Op::Sub, 0, lhs, parse_term());
      else
        return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      if (eat('*'))
        lhs = add(Expr::Op::Mul, 0, lhs, parse_factor());
      else if (eat('/'))
        lhs = add(Expr::Op::Div, 0, lhs, parse_factor());
      else
        return lhs;
    }
  }

  int parse_factor() {
    if (eat('-')) return add(Expr::Op::Neg, 0, parse_factor());
    if (eat('+')) return parse_factor();
    return parse_primary();
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    if (eat('(')) {
      int e = parse_expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<size_t>(end - begin);
    return add(Expr::Op::Num, v);
  }

  int parse_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    if (id == "x") return add(Expr::Op::VarX);
    if (id == "t") return add(Expr::Op::VarT);
    if (id == "pi") return add(Expr::Op::Num, M_PI);
    if (id.size() == 2 && id[0] == 'q' && id[1] >= '1' && id[1] <= '9')
      return add(Expr::Op::VarQ, id[1] - '1');
    if (id == "sin" || id == "cos" || id == "exp") {
      if (!eat('(')) fail("expected '(' after " + id);
      int arg = parse_expr();
      if (!eat(')')) fail("missing ')'");
      Expr::Op op = id == "sin" ? Expr::Op::Sin : id == "cos" ? Expr::Op::Cos : Expr::Op::Exp;
      return add(op, 0, arg);
    }
    pos_ = start;
    fail("unknown identifier \"" + id + "\"");
  }
};

Expr Expr::parse(const std::string& text) {
  Expr e;
  ExprParser(text, e).run();
  return e;
}

double Expr::eval(double x, double t, const double* q, int nq) const {
  if (root_ < 0) throw ConfigError("evaluating empty expression");
  // Nodes are appended children-first, so a single forward pass evaluates the DAG.
  std::vector<double> v(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const N& n = nodes_[i];
    switch (n.op) {
      case Op::Num: v[i] = n.num; break;
      case Op::VarX: v[i] = x; break;
      case Op::VarT: v[i] = t; break;
      case Op::VarQ: {
        int qi = static_cast<int>(n.num);
        if (!q || qi >= nq)
          throw ConfigError("expression \"" + text_ + "\" uses q" + std::to_string(qi + 1) +
                            " but only " + std::to_string(nq) + " state values are available");
        v[i] = q[qi];
        break;
      }
      case Op::Add: v[i] = v[n.a] + v[n.b]; break;
      case Op::Sub: v[i] = v[n.a] - v[n.b]; break;
      case Op::Mul: v[i] = v[n.a] * v[n.b]; break;
      case Op::Div: v[i] = v[n.a] / v[n.b]; break;
      case Op::Neg: v[i] = -v[n.a]; break;
      case Op::Sin: v[i] = std::sin(v[n.a]); break;
      case Op::Cos: v[i] = std::cos(v[n.a]); break;
      case Op::Exp: v[i] = std::exp(v[n.a]); break;
    }
  }
  return v[root_];
}

}  // namespace reprodiff
