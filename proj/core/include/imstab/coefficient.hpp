#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imstab/expr.hpp"
#include "imstab/field.hpp"

namespace imstab {

// Region predicate for a coefficient piece. Halfplane is a*x1 + b*x2 <= c;
// disk is inside/outside of a circle. Pieces are tested in order, first
// match wins, so the shared interface line belongs to the earlier piece.
struct Region {
  enum class Type { all, halfplane, disk };
  Type type = Type::all;
  double a = 0.0, b = 0.0, c = 0.0;      // halfplane
  double cx = 0.0, cy = 0.0, r = 1.0;    // disk
  bool inside = true;                    // disk orientation

  bool contains(Point p) const;
};

struct Piece {
  std::string expr_text;
  ExprPtr expr;
  Region region;
};

enum class Continuity { C0, C1, analytic };

// Anything evaluable pointwise as a coefficient. CoefficientField is the
// expression-backed implementation; BlendCoefficient supports amplitude
// families gamma1 + t*(gamma2 - gamma1) without re-parsing.
class Coefficient {
 public:
  virtual ~Coefficient() = default;
  virtual Complex eval(Point p) const = 0;
};

using CoefPtr = std::shared_ptr<const Coefficient>;

class CoefficientField : public Coefficient {
 public:
  CoefficientField() = default;
  CoefficientField(std::vector<Piece> pieces, Continuity continuity);

  static CoefficientField constant(Complex v);
  static CoefficientField from_expr(const std::string& text);

  Complex eval(Point p) const override;
  const std::vector<Piece>& pieces() const { return pieces_; }
  const Piece* piece_at(Point p) const;  // first piece containing p, or null
  Continuity continuity() const { return continuity_; }

  // Interface polylines between consecutive pieces, sampled for the seam
  // diagnostics. Halfplane interfaces become line segments clipped to a box.
  std::vector<std::vector<Point>> interface_polylines(const Domain& domain) const;

  // Two-sided continuity probe across each interface; returns the largest
  // mismatch found. Continuity >= C0 requires this below 1e-8.
  double continuity_mismatch(const Domain& domain) const;

  // Serialization per the public JSON contract.
  std::string to_json() const;
  static CoefficientField from_json(const std::string& json_text);

 private:
  std::vector<Piece> pieces_;
  Continuity continuity_ = Continuity::analytic;
};

class BlendCoefficient : public Coefficient {
 public:
  BlendCoefficient(CoefPtr base, CoefPtr target, double t) : a_(base), b_(target), t_(t) {}
  Complex eval(Point p) const override {
    Complex va = a_->eval(p);
    return va + t_ * (b_->eval(p) - va);
  }

 private:
  CoefPtr a_, b_;
  double t_;
};

// Nodewise evaluation; exterior nodes evaluate too (closed forms extend),
// but a node with no covering piece is a coverage error.
GridField evaluate(const Coefficient& f, std::shared_ptr<const Grid> grid);

// psi = gamma2 - gamma1.
GridField psi_field(const Coefficient& gamma1, const Coefficient& gamma2,
                    std::shared_ptr<const Grid> grid);

// Seam diagnostic: largest jump of one-sided second differences across the
// field's interfaces, measured along grid lines that cross them. Smooth (C2)
// fields give O(h); a curvature break shows up at O(1) against that.
double interface_jump_scan(const CoefficientField& f, const Grid& grid);

}  // namespace imstab
