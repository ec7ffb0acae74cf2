#include "imstab/quadrature.hpp"

#include <cmath>

#include "imstab/errors.hpp"

namespace imstab {

Complex integrate(const GridField& f, const NodeMask& mask) {
  const Grid& g = f.grid();
  if (mask.size() != g.node_count())
    fail(errc::precondition, "integrate", "mask size does not match grid");
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k] && !f.valid(k)) fail(errc::masked_value, "integrate", "mask touches invalid node");

  Complex acc(0.0, 0.0);
  double area = g.cell_area();
  for (int cj = 0; cj < g.ny(); ++cj)
    for (int ci = 0; ci < g.nx(); ++ci) {
      std::size_t k00 = g.index(ci, cj), k10 = g.index(ci + 1, cj);
      std::size_t k01 = g.index(ci, cj + 1), k11 = g.index(ci + 1, cj + 1);
      if (mask[k00] && mask[k10] && mask[k01] && mask[k11])
        acc += (f[k00] + f[k10] + f[k01] + f[k11]) * (0.25 * area);
    }
  return acc;
}

double mask_area(const Grid& g, const NodeMask& mask) {
  double acc = 0.0;
  for (int cj = 0; cj < g.ny(); ++cj)
    for (int ci = 0; ci < g.nx(); ++ci)
      if (mask[g.index(ci, cj)] && mask[g.index(ci + 1, cj)] && mask[g.index(ci, cj + 1)] &&
          mask[g.index(ci + 1, cj + 1)])
        acc += g.cell_area();
  return acc;
}

double norm_linf(const GridField& f, const NodeMask& mask) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!mask[k]) continue;
    if (!f.valid(k)) fail(errc::masked_value, "norm", "mask touches invalid node");
    m = std::max(m, std::abs(f[k]));
  }
  return m;
}

static NodeMask intersect_validity(const NodeMask& mask, const GridField& d) {
  NodeMask out(mask.size(), 0);
  for (std::size_t k = 0; k < mask.size(); ++k) out[k] = mask[k] && d.valid(k);
  return out;
}

static double l1_of(const GridField& d, const NodeMask& mask) {
  return integrate(d.abs(), intersect_validity(mask, d)).real();
}

static double lp_pow_of(const GridField& d, const NodeMask& mask, double s) {
  GridField p = d;
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = Complex(std::pow(std::abs(p[k]), s), 0.0);
  return integrate(p, intersect_validity(mask, d)).real();
}

double norm(const GridField& f, NormKind kind, const NodeMask& mask, double s) {
  switch (kind) {
    case NormKind::Linf:
      return norm_linf(f, mask);
    case NormKind::L1:
      return l1_of(f, mask);
    case NormKind::W1s: {
      // Gagliardo-Nirenberg hypothesis: s > n = 2.
      if (!(s > 2.0)) fail(errc::bad_exponent, "norm", "W1s needs s > 2");
      double acc = lp_pow_of(f, mask, s);
      acc += lp_pow_of(diff_x(f), mask, s);
      acc += lp_pow_of(diff_y(f), mask, s);
      return std::pow(acc, 1.0 / s);
    }
    case NormKind::W21: {
      double acc = l1_of(f, mask);
      acc += l1_of(diff_x(f), mask);
      acc += l1_of(diff_y(f), mask);
      acc += l1_of(diff_xx(f), mask);
      acc += l1_of(diff_xy(f), mask);
      acc += l1_of(diff_yy(f), mask);
      return acc;
    }
  }
  fail(errc::precondition, "norm", "unknown norm kind");
}

}  // namespace imstab
