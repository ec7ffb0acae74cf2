#pragma once

#include <complex>
#include <memory>
#include <string>

#include "imstab/domain.hpp"

namespace imstab {

// Closed-form expressions over (x1, x2) with complex arithmetic.
// Grammar: + - * / ^, functions sin cos exp re im, the constant i,
// variables x1 x2, decimal literals, parentheses, unary +/-.
class Expr {
 public:
  virtual ~Expr() = default;
  virtual std::complex<double> eval(double x1, double x2) const = 0;
};

using ExprPtr = std::shared_ptr<const Expr>;

// Throws errc::validation with a position on malformed input.
ExprPtr parse_expr(const std::string& text);

inline std::complex<double> eval_at(const Expr& e, Point p) { return e.eval(p.x, p.y); }

}  // namespace imstab
