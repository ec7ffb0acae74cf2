#include "imstab/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>

#include "imstab/errors.hpp"

namespace imstab {

namespace {

using C = std::complex<double>;

struct Const : Expr {
  C v;
  explicit Const(C c) : v(c) {}
  C eval(double, double) const override { return v; }
};

struct Var : Expr {
  int which;  // 1 or 2
  explicit Var(int w) : which(w) {}
  C eval(double x1, double x2) const override { return C(which == 1 ? x1 : x2, 0.0); }
};

struct Unary : Expr {
  char op;
  ExprPtr a;
  Unary(char o, ExprPtr e) : op(o), a(std::move(e)) {}
  C eval(double x1, double x2) const override {
    C v = a->eval(x1, x2);
    return op == '-' ? -v : v;
  }
};

struct Binary : Expr {
  char op;
  ExprPtr a, b;
  Binary(char o, ExprPtr l, ExprPtr r) : op(o), a(std::move(l)), b(std::move(r)) {}
  C eval(double x1, double x2) const override {
    C l = a->eval(x1, x2), r = b->eval(x1, x2);
    switch (op) {
      case '+': return l + r;
      case '-': return l - r;
      case '*': return l * r;
      case '/': return l / r;
      default: break;
    }
    // '^': keep integer powers exact.
    if (r.imag() == 0.0 && r.real() == std::floor(r.real()) && std::abs(r.real()) <= 64) {
      long n = long(r.real());
      C base = n < 0 ? C(1.0) / l : l;
      C acc(1.0, 0.0);
      for (long k = 0; k < std::labs(n); ++k) acc *= base;
      return acc;
    }
    return std::pow(l, r);
  }
};

struct Func : Expr {
  std::string name;
  ExprPtr a;
  Func(std::string n, ExprPtr e) : name(std::move(n)), a(std::move(e)) {}
  C eval(double x1, double x2) const override {
    C v = a->eval(x1, x2);
    if (name == "sin") return std::sin(v);
    if (name == "cos") return std::cos(v);
    if (name == "exp") return std::exp(v);
    if (name == "re") return C(v.real(), 0.0);
    return C(v.imag(), 0.0);  // "im"
  }
};

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) err("trailing input");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void err(const std::string& msg) {
    fail(errc::validation, "expr",
         msg + " at position " + std::to_string(pos_) + " in \"" + s_ + "\"");
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

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr expr() {
    ExprPtr e = term();
    while (true) {
      if (eat('+'))
        e = std::make_shared<Binary>('+', e, term());
      else if (eat('-'))
        e = std::make_shared<Binary>('-', e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (true) {
      if (eat('*'))
        e = std::make_shared<Binary>('*', e, unary());
      else if (eat('/'))
        e = std::make_shared<Binary>('/', e, unary());
      else
        return e;
    }
  }

  ExprPtr unary() {
    if (eat('-')) return std::make_shared<Unary>('-', unary());
    if (eat('+')) return unary();
    return power();
  }

  ExprPtr power() {
    ExprPtr base = atom();
    if (eat('^')) return std::make_shared<Binary>('^', base, unary());  // right assoc
    return base;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) err("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!eat(')')) err("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    err("unexpected character");
  }

  ExprPtr number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' was not an exponent
      }
    }
    try {
      return std::make_shared<Const>(C(std::stod(s_.substr(start, pos_ - start)), 0.0));
    } catch (const std::exception&) {
      err("bad numeric literal");
    }
  }

  ExprPtr ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name == "i") return std::make_shared<Const>(C(0.0, 1.0));
    if (name == "x1") return std::make_shared<Var>(1);
    if (name == "x2") return std::make_shared<Var>(2);
    if (name == "sin" || name == "cos" || name == "exp" || name == "re" || name == "im") {
      if (!eat('(')) err("expected '(' after function name");
      ExprPtr arg = expr();
      if (!eat(')')) err("missing ')'");
      return std::make_shared<Func>(name, arg);
    }
    pos_ = start;
    err("unknown identifier '" + name + "'");
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text) { return Parser(text).parse(); }

}  // namespace imstab
