#include "imstab/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imstab/distance.hpp"
#include "imstab/errors.hpp"
#include "imstab/level_set.hpp"
#include "imstab/quadrature.hpp"

namespace imstab {

double SectorDecomposition::angle_hi(std::size_t k) const {
  return k + 1 < angles.size() ? angles[k + 1] : angles[0] + 2.0 * M_PI;
}

double SectorDecomposition::gap(std::size_t k) const { return angle_hi(k) - angles[k]; }

Complex SectorDecomposition::rotation(std::size_t k) const {
  double mid = 0.5 * (angles[k] + angle_hi(k));
  return std::polar(1.0, -mid);
}

double SectorDecomposition::slope_ck(std::size_t k) const { return 1.0 / std::tan(0.5 * gap(k)); }

Complex SectorDecomposition::beta(std::size_t k) const { return rotation(k); }

double arg_level_measure(const GridField& psi, double kappa, double tau_0, const NodeMask& mask) {
  const Grid& g = psi.grid();
  Complex rot = std::polar(1.0, -kappa);
  GridField rotated = psi.scaled(rot);
  GridField im = rotated.imag_part();

  // Keep a crossing only when the interpolated difference is genuinely
  // nonzero there and its argument lands on kappa to grid accuracy; the
  // zero level of Im(psi e^{-i kappa}) also sweeps up the sets where psi
  // itself degenerates (nodal curves, support boundaries), which carry no
  // arg-psi mass.
  double tol_arg = g.h();
  double len = 0.0;
  for (const Segment& s : extract_level_segments(im, 0.0, mask)) {
    Point mid{0.5 * (s.a.x + s.b.x), 0.5 * (s.a.y + s.b.y)};
    Complex pm = rotated.interpolate(mid);
    if (std::abs(pm) > tau_0 && std::abs(std::arg(pm)) <= tol_arg) len += segment_length(s);
  }

  // A ray hit exactly (real-valued psi at kappa = 0 or pi, say) makes the
  // rotated imaginary part vanish on a set of positive area that marching
  // squares cannot see as a curve. Charge that area at the length scale 1/h.
  NodeMask flat(mask.size(), 0);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask[k] || !psi.valid(k)) continue;
    double mod = std::abs(psi[k]);
    Complex r = rotated[k];
    flat[k] = mod > tau_0 && std::abs(r.imag()) <= 1e-9 * mod && r.real() > 0.0;
  }
  len += mask_area(g, flat) / g.h();
  return len;
}

bool sufficient_condition_check(const GridField& psi, double kappa, double sigma,
                                const NodeMask& mask) {
  if (!(kappa >= 0.0 && kappa < 0.5 * (M_PI - sigma)))
    fail(errc::precondition, "sectors", "kappa must lie in [0, (pi - sigma)/2)");
  double t = std::tan(kappa);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (!mask[k]) continue;
    if (std::abs(psi[k].imag()) > t * std::abs(psi[k].real()) + 1e-15) return false;
  }
  return true;
}

namespace {

std::vector<double> rotated_tuple(int n_angles, double base) {
  std::vector<double> out(n_angles);
  for (int k = 0; k < n_angles; ++k) {
    double a = base + 2.0 * M_PI * k / n_angles;
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    out[std::size_t(k)] = a;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SectorDecomposition sector_decompose(const GridField& psi, double sigma, const NodeMask& mask) {
  if (!(sigma > 0.0 && sigma <= M_PI / 4.0))
    fail(errc::precondition, "sectors", "sigma must lie in (0, pi/4]");
  SectorDecomposition out;
  out.sigma = sigma;
  double scale = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k)
    if (mask[k]) scale = std::max(scale, std::abs(psi[k]));
  out.tau_0 = 1e-10 * scale;
  out.tau_H = 5.0 * psi.grid().h();

  if (scale == 0.0) {
    // psi vanishes identically: admissible vacuously, any legal tuple works.
    out.vacuous = true;
    out.admissible = true;
    out.angles = rotated_tuple(3, M_PI / 36.0);
    return out;
  }

  const double step = M_PI / 36.0;
  double best_excess = std::numeric_limits<double>::infinity();
  double best_witness = 0.0, best_witness_measure = 0.0;

  for (int n_angles : {3, 4}) {
    double period = 2.0 * M_PI / n_angles;
    int rotations = int(std::floor(period / step));
    for (int j = 0; j < rotations; ++j) {
      std::vector<double> tuple = rotated_tuple(n_angles, j * step);
      double worst = 0.0, worst_angle = tuple[0];
      for (double kappa : tuple) {
        double m = arg_level_measure(psi, kappa, out.tau_0, mask);
        if (m > worst) {
          worst = m;
          worst_angle = kappa;
        }
        if (worst >= out.tau_H) break;  // tuple already dead
      }
      if (worst < out.tau_H) {
        out.admissible = true;
        out.angles = tuple;
        return out;
      }
      if (worst < best_excess) {
        best_excess = worst;
        best_witness = worst_angle;
        best_witness_measure = worst;
      }
    }
  }
  out.admissible = false;
  out.witness_angle = best_witness;
  out.witness_measure = best_witness_measure;
  return out;
}

std::vector<double> reduce_angles(std::vector<double> angles, double sigma) {
  if (angles.size() < 3) fail(errc::precondition, "sectors", "need at least 3 angles");
  double bound = M_PI - sigma;
  auto gap_at = [&](std::size_t k) {
    double hi = k + 1 < angles.size() ? angles[k + 1] : angles[0] + 2.0 * M_PI;
    return hi - angles[k];
  };
  for (std::size_t k = 0; k < angles.size(); ++k)
    if (gap_at(k) > bound + 1e-12)
      fail(errc::precondition, "sectors", "input violates the gap bound pi - sigma");

  while (angles.size() > 4) {
    bool removed = false;
    for (std::size_t k = 0; k < angles.size(); ++k) {
      double two_gap = gap_at(k) + gap_at((k + 1) % angles.size());
      if (two_gap <= bound + 1e-12) {
        angles.erase(angles.begin() + ((k + 1) % angles.size()));
        removed = true;
        break;
      }
    }
    if (!removed)
      fail(errc::precondition, "sectors", "no removable angle found (cannot happen for l >= 5)");
  }
  return angles;
}

GridField theta_field(const GridField& psi, const SectorDecomposition& sectors, std::size_t k) {
  if (k >= sectors.count()) fail(errc::precondition, "sectors", "sector index out of range");
  Complex rot = sectors.rotation(k);
  double ck = sectors.slope_ck(k);
  GridField out(psi.grid_ptr());
  for (std::size_t n = 0; n < psi.size(); ++n) {
    Complex pk = rot * psi[n];
    out[n] = Complex(pk.real() - ck * std::abs(pk.imag()), 0.0);
    out.set_valid(n, psi.valid(n));
  }
  return out;
}

ClampedTheta theta_clamped(const GridField& theta, double h_band) {
  if (!(h_band > 0.0)) fail(errc::precondition, "sectors", "h_band must be positive");
  ClampedTheta out{GridField(theta.grid_ptr()), NodeMask(theta.size(), 0)};
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double t = theta[k].real();
    out.value[k] = Complex(std::clamp(t, 0.0, h_band) / h_band, 0.0);
    out.value.set_valid(k, theta.valid(k));
    out.band[k] = (t > 0.0 && t < h_band) ? 1 : 0;
  }
  return out;
}

GridField cutoff_tau(const NodeMask& region, double h_band, std::shared_ptr<const Grid> grid) {
  if (h_band <= 2.0 * grid->h())
    fail(errc::resolution, "sectors", "h_band must exceed two grid spacings");
  NodeMask complement(region.size(), 0);
  for (std::size_t k = 0; k < region.size(); ++k) complement[k] = region[k] ? 0 : 1;
  GridField dist = distance_field(complement, grid);
  GridField out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double d = dist[k].real();
    double t = (d - 0.5 * h_band) / (0.5 * h_band);
    t = std::clamp(t, 0.0, 1.0);
    out[k] = Complex(t * t * (3.0 - 2.0 * t), 0.0);
  }
  return out;
}

}  // namespace imstab
