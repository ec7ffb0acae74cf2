#include "imstab/problem.hpp"

#include <cmath>
#include <set>

#include "imstab/errors.hpp"

namespace imstab {

MatrixCoefficient MatrixCoefficient::identity() {
  MatrixCoefficient m;
  m.a11 = std::make_shared<CoefficientField>(CoefficientField::from_expr("1"));
  m.a12 = std::make_shared<CoefficientField>(CoefficientField::from_expr("0"));
  m.a22 = std::make_shared<CoefficientField>(CoefficientField::from_expr("1"));
  return m;
}

std::array<Complex, 4> MatrixCoefficient::eval(Point p) const {
  Complex v11 = a11->eval(p), v12 = a12->eval(p), v22 = a22->eval(p);
  return {v11, v12, std::conj(v12), v22};
}

namespace {

// Min eigenvalue of the Hermitian part; diagonal entries must be real.
double hermitian_min_eig(const std::array<Complex, 4>& m) {
  double a = m[0].real(), d = m[3].real();
  double tr = a + d;
  double det = a * d - std::norm(m[1]);
  double disc = tr * tr / 4.0 - det;
  if (disc < 0.0) disc = 0.0;
  return tr / 2.0 - std::sqrt(disc);
}

// Region parameters as a comparable signature; used to check that gamma and
// rho place their interface curves at the same locations.
std::string region_signature(const Region& r) {
  auto num = [](double v) { return std::to_string(v); };
  switch (r.type) {
    case Region::Type::all:
      return "";
    case Region::Type::halfplane:
      return "H(" + num(r.a) + "," + num(r.b) + "," + num(r.c) + ")";
    case Region::Type::disk:
      return "D(" + num(r.cx) + "," + num(r.cy) + "," + num(r.r) + "," +
             (r.inside ? "1" : "0") + ")";
  }
  return "";
}

std::multiset<std::string> interface_signatures(const Coefficient& c) {
  std::multiset<std::string> out;
  if (const auto* cf = dynamic_cast<const CoefficientField*>(&c))
    for (const Piece& p : cf->pieces()) {
      std::string sig = region_signature(p.region);
      if (!sig.empty()) out.insert(sig);
    }
  return out;
}

double sup_w1inf(const Coefficient& f, const Grid& grid) {
  // ||f||_{W^{1,inf}} sampled at interior nodes with step-h differences.
  double m = 0.0;
  double hx = grid.hx(), hy = grid.hy();
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    if (!grid.is_interior(k)) continue;
    Point p = grid.node(k);
    Complex v = f.eval(p);
    Complex dx = (f.eval({p.x + hx, p.y}) - f.eval({p.x - hx, p.y})) / (2.0 * hx);
    Complex dy = (f.eval({p.x, p.y + hy}) - f.eval({p.x, p.y - hy})) / (2.0 * hy);
    m = std::max(m, std::abs(v) + std::hypot(std::abs(dx), std::abs(dy)));
  }
  return m;
}

}  // namespace

void ProblemSpec::validate(const Grid& grid) const {
  if (!gamma || !rho || !g) fail(errc::validation, "problem", "gamma, rho and g are required");
  if (!(sigma > 0.0 && sigma <= M_PI / 4.0))
    fail(errc::validation, "problem", "sigma must lie in (0, pi/4]");
  if (omega2 < 0.0) fail(errc::validation, "problem", "omega2 must be nonnegative");

  bool gamma_complex = false;
  double max_abs_gamma = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    if (grid.kind(k) == NodeKind::exterior) continue;
    Point p = grid.node(k);
    auto m = A.eval(p);
    if (std::abs(m[0].imag()) > 1e-12 || std::abs(m[3].imag()) > 1e-12)
      fail(errc::validation, "problem", "A has non-real diagonal entries");
    if (hermitian_min_eig(m) <= 0.0)
      fail(errc::validation, "problem", "A is not positive definite at a sampled node");
    Complex gv = gamma->eval(p);
    max_abs_gamma = std::max(max_abs_gamma, std::abs(gv));
    if (!(gv.real() > 0.0)) fail(errc::validation, "problem", "Re gamma must be positive");
    if (std::abs(gv.imag()) > 1e-14) gamma_complex = true;
  }
  if (gamma_complex) {
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      if (grid.kind(k) == NodeKind::exterior) continue;
      Point p = grid.node(k);
      Complex gv = gamma->eval(p);
      if (std::abs(gv.imag()) > 1e-14 && gv.imag() < 0.0)
        fail(errc::validation, "problem", "Im gamma must be nonnegative when gamma is complex");
      if (rho->eval(p).imag() > 1e-12)
        fail(errc::validation, "problem", "Im rho must be nonpositive when gamma is complex");
    }
  }

  // Singularity locations of gamma and rho must coincide; the check is
  // syntactic on the piece regions and only fires when both are piecewise.
  auto sg = interface_signatures(*gamma);
  auto sr = interface_signatures(*rho);
  if (!sg.empty() && !sr.empty() && sg != sr)
    fail(errc::validation, "problem",
         "gamma and rho declare interface curves at different locations");

  // Declared continuity classes must hold across the interfaces.
  for (const Coefficient* c : {gamma.get(), rho.get()}) {
    const auto* cfield = dynamic_cast<const CoefficientField*>(c);
    if (!cfield || cfield->pieces().size() < 2) continue;
    double mismatch = cfield->continuity_mismatch(grid.domain());
    if (mismatch >= 1e-8)
      fail(errc::validation, "problem",
           "piecewise coefficient jumps by " + std::to_string(mismatch) +
               " across a declared-continuous interface");
  }

  double inv_sigma = 1.0 / sigma;
  double wg = sup_w1inf(*gamma, grid);
  if (wg > inv_sigma)
    fail(errc::validation, "problem",
         "||gamma||_W1inf = " + std::to_string(wg) + " exceeds 1/sigma = " +
             std::to_string(inv_sigma));
  double wa = sup_w1inf(*A.a11, grid) + 2.0 * sup_w1inf(*A.a12, grid) + sup_w1inf(*A.a22, grid);
  if (wa > inv_sigma)
    fail(errc::validation, "problem",
         "||A||_W1inf = " + std::to_string(wa) + " exceeds 1/sigma = " + std::to_string(inv_sigma));
}

}  // namespace imstab
