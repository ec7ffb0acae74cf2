#include "imstab/coefficient.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "imstab/errors.hpp"

namespace imstab {

using nlohmann::json;

bool Region::contains(Point p) const {
  switch (type) {
    case Type::all:
      return true;
    case Type::halfplane:
      return a * p.x + b * p.y <= c;
    case Type::disk: {
      double d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
      return inside ? d2 <= r * r : d2 > r * r;
    }
  }
  return false;
}

CoefficientField::CoefficientField(std::vector<Piece> pieces, Continuity continuity)
    : pieces_(std::move(pieces)), continuity_(continuity) {
  for (auto& p : pieces_)
    if (!p.expr) p.expr = parse_expr(p.expr_text);
}

CoefficientField CoefficientField::constant(Complex v) {
  std::string t = std::to_string(v.real());
  if (v.imag() != 0.0) t += "+(" + std::to_string(v.imag()) + ")*i";
  return from_expr(t);
}

CoefficientField CoefficientField::from_expr(const std::string& text) {
  Piece p;
  p.expr_text = text;
  p.expr = parse_expr(text);
  p.region.type = Region::Type::all;
  return CoefficientField({p}, Continuity::analytic);
}

Complex CoefficientField::eval(Point p) const {
  for (const Piece& piece : pieces_)
    if (piece.region.contains(p)) return eval_at(*piece.expr, p);
  fail(errc::coverage, "coefficient", "no piece covers point (" + std::to_string(p.x) + ", " +
                                          std::to_string(p.y) + ")");
}

std::vector<std::vector<Point>> CoefficientField::interface_polylines(const Domain& domain) const {
  std::vector<std::vector<Point>> out;
  Point lo = domain.bbox_min(), hi = domain.bbox_max();
  const int samples = 256;
  for (const Piece& piece : pieces_) {
    const Region& rg = piece.region;
    if (rg.type == Region::Type::halfplane) {
      // Line a*x + b*y = c clipped to the bounding box, sampled densely.
      double nn = std::hypot(rg.a, rg.b);
      if (nn == 0.0) continue;
      // Direction along the line.
      double dx = -rg.b / nn, dy = rg.a / nn;
      // A point on the line closest to the box center.
      double cx0 = 0.5 * (lo.x + hi.x), cy0 = 0.5 * (lo.y + hi.y);
      double t0 = (rg.c - rg.a * cx0 - rg.b * cy0) / (nn * nn);
      double px = cx0 + rg.a * t0, py = cy0 + rg.b * t0;
      double span = std::hypot(hi.x - lo.x, hi.y - lo.y);
      std::vector<Point> line;
      for (int k = 0; k <= samples; ++k) {
        double t = -span + 2.0 * span * k / samples;
        Point q{px + t * dx, py + t * dy};
        if (q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y) line.push_back(q);
      }
      if (line.size() >= 2) out.push_back(std::move(line));
    } else if (rg.type == Region::Type::disk) {
      std::vector<Point> circle;
      for (int k = 0; k <= samples; ++k) {
        double ang = 2.0 * M_PI * k / samples;
        Point q{rg.cx + rg.r * std::cos(ang), rg.cy + rg.r * std::sin(ang)};
        if (q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y) circle.push_back(q);
      }
      if (circle.size() >= 2) out.push_back(std::move(circle));
    }
  }
  return out;
}

const Piece* CoefficientField::piece_at(Point p) const {
  for (const Piece& piece : pieces_)
    if (piece.region.contains(p)) return &piece;
  return nullptr;
}

double CoefficientField::continuity_mismatch(const Domain& domain) const {
  if (pieces_.size() == 1) return 0.0;
  double worst = 0.0;
  // At each interface midpoint, find the piece owning either side and compare
  // their analytic extensions evaluated at the midpoint itself.
  for (const auto& line : interface_polylines(domain)) {
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
      Point m{0.5 * (line[k].x + line[k + 1].x), 0.5 * (line[k].y + line[k + 1].y)};
      double tx = line[k + 1].x - line[k].x, ty = line[k + 1].y - line[k].y;
      double tn = std::hypot(tx, ty);
      if (tn == 0.0) continue;
      double nx = -ty / tn, ny = tx / tn;
      const double eps = 1e-7 * std::max(1.0, domain.diameter());
      const Piece* a = piece_at({m.x + eps * nx, m.y + eps * ny});
      const Piece* b = piece_at({m.x - eps * nx, m.y - eps * ny});
      if (!a || !b || a == b) continue;
      worst = std::max(worst, std::abs(eval_at(*a->expr, m) - eval_at(*b->expr, m)));
    }
  }
  return worst;
}

static json region_to_json(const Region& r) {
  json j;
  switch (r.type) {
    case Region::Type::all:
      j["type"] = "all";
      break;
    case Region::Type::halfplane:
      j["type"] = "halfplane";
      j["a"] = r.a;
      j["b"] = r.b;
      j["c"] = r.c;
      break;
    case Region::Type::disk:
      j["type"] = "disk";
      j["cx"] = r.cx;
      j["cy"] = r.cy;
      j["r"] = r.r;
      j["inside"] = r.inside;
      break;
  }
  return j;
}

static Region region_from_json(const json& j) {
  Region r;
  std::string type = j.at("type").get<std::string>();
  if (type == "all") {
    r.type = Region::Type::all;
  } else if (type == "halfplane") {
    r.type = Region::Type::halfplane;
    r.a = j.at("a").get<double>();
    r.b = j.at("b").get<double>();
    r.c = j.at("c").get<double>();
  } else if (type == "disk") {
    r.type = Region::Type::disk;
    r.cx = j.at("cx").get<double>();
    r.cy = j.at("cy").get<double>();
    r.r = j.at("r").get<double>();
    r.inside = j.value("inside", true);
  } else {
    fail(errc::validation, "coefficient", "unknown region type '" + type + "'");
  }
  return r;
}

std::string CoefficientField::to_json() const {
  json j;
  j["pieces"] = json::array();
  for (const Piece& p : pieces_) {
    json pj;
    pj["expr"] = p.expr_text;
    pj["region"] = region_to_json(p.region);
    j["pieces"].push_back(pj);
  }
  j["continuity"] =
      continuity_ == Continuity::C0 ? "C0" : (continuity_ == Continuity::C1 ? "C1" : "analytic");
  return j.dump();
}

CoefficientField CoefficientField::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true);
  std::vector<Piece> pieces;
  for (const auto& pj : j.at("pieces")) {
    Piece p;
    p.expr_text = pj.at("expr").get<std::string>();
    p.expr = parse_expr(p.expr_text);
    p.region = region_from_json(pj.at("region"));
    pieces.push_back(std::move(p));
  }
  std::string cont = j.value("continuity", "analytic");
  Continuity c = cont == "C0" ? Continuity::C0 : (cont == "C1" ? Continuity::C1 : Continuity::analytic);
  return CoefficientField(std::move(pieces), c);
}

GridField evaluate(const Coefficient& f, std::shared_ptr<const Grid> grid) {
  GridField out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f.eval(grid->node(k));
  return out;
}

GridField psi_field(const Coefficient& gamma1, const Coefficient& gamma2,
                    std::shared_ptr<const Grid> grid) {
  return evaluate(gamma2, grid) - evaluate(gamma1, grid);
}

double interface_jump_scan(const CoefficientField& f, const Grid& grid) {
  // Compares the slopes of the one-sided second differences across each
  // interface. A field that is C2 across the seam but loses analyticity
  // there shows an O(1) jump of the third normal derivative; a genuinely
  // smooth seam shows O(step). The probe step is analytic, far below the
  // grid spacing, so fourth-derivative drift does not mask a real jump.
  double worst = 0.0;
  double h = 1e-4 * std::max(1.0, grid.domain().diameter());
  for (const auto& line : f.interface_polylines(grid.domain())) {
    for (std::size_t k = 0; k + 1 < line.size(); k += 8) {
      Point m{0.5 * (line[k].x + line[k + 1].x), 0.5 * (line[k].y + line[k + 1].y)};
      double tx = line[k + 1].x - line[k].x, ty = line[k + 1].y - line[k].y;
      double tn = std::hypot(tx, ty);
      if (tn == 0.0) continue;
      double nx = -ty / tn, ny = tx / tn;
      auto sample = [&](double step) {
        return f.eval({m.x + step * nx, m.y + step * ny});
      };
      auto d3 = [&](double side) {
        Complex f1 = sample(side * 1.0 * h), f2 = sample(side * 2.0 * h);
        Complex f3 = sample(side * 3.0 * h), f4 = sample(side * 4.0 * h);
        return (f4 - 3.0 * f3 + 3.0 * f2 - f1) / (side * h * h * h);
      };
      worst = std::max(worst, std::abs(d3(+1.0) - d3(-1.0)));
    }
  }
  return worst;
}

}  // namespace imstab
