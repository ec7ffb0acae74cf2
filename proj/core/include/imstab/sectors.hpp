#pragma once

#include <optional>
#include <vector>

#include "imstab/field.hpp"

namespace imstab {

// Sector decomposition of the complex plane by exceptional angles
// kappa_1 < ... < kappa_l (l in {3,4}), gaps at most pi - sigma. Sector k
// spans [kappa_k, kappa_{k+1}] with kappa_{l+1} = kappa_1 + 2*pi.
struct SectorDecomposition {
  std::vector<double> angles;
  double sigma = 0.0;
  bool admissible = false;
  double witness_angle = 0.0;    // only meaningful when !admissible
  double witness_measure = 0.0;
  double tau_0 = 0.0;            // modulus floor defining "psi != 0"
  double tau_H = 0.0;            // length tolerance for "H_1 measure zero"
  bool vacuous = false;          // psi identically zero

  std::size_t count() const { return angles.size(); }
  double angle_hi(std::size_t k) const;          // kappa_{k+1} (wrapped)
  double gap(std::size_t k) const;               // kappa_{k+1} - kappa_k
  Complex rotation(std::size_t k) const;         // exp(-i(kappa_k+kappa_{k+1})/2)
  double slope_ck(std::size_t k) const;          // 1/tan(gap/2)
  Complex beta(std::size_t k) const;             // same value as rotation()
};

// H_1 length of {x : psi(x) != 0, arg psi(x) = kappa mod 2pi} inside the
// mask. Extracted as the zero level of Im(psi * e^{-i kappa}); segments are
// kept only where the interpolated psi at the segment midpoint has modulus
// above tau_0 and positive rotated real part, which kills the spurious
// crossings a principal-value arg field would produce along {psi = 0}.
double arg_level_measure(const GridField& psi, double kappa, double tau_0, const NodeMask& mask);

// Remark-style sufficient condition: |Im psi| <= tan(kappa)*|Re psi| at
// every masked node. Requires 0 <= kappa < (pi - sigma)/2.
bool sufficient_condition_check(const GridField& psi, double kappa, double sigma,
                                const NodeMask& mask);

// Sweeps rotated regular 3- and 4-angle tuples (step pi/36) and returns the
// first tuple whose every angle has arg-level measure below tau_H. The
// moduli floor is tau_0 = 1e-10 * max|psi|; tau_H = 5 * h_grid.
SectorDecomposition sector_decompose(const GridField& psi, double sigma, const NodeMask& mask);

// Remark (ii): drop angles while l > 4, preserving gaps <= pi - sigma.
std::vector<double> reduce_angles(std::vector<double> angles, double sigma);

// theta_k = Re psi_k - c_k |Im psi_k| with psi_k the rotated difference;
// positive inside sector k, zero on its boundary rays, negative outside.
GridField theta_field(const GridField& psi, const SectorDecomposition& sectors, std::size_t k);

struct ClampedTheta {
  GridField value;   // h^{-1}([theta]^+ ∧ h), in [0,1]
  NodeMask band;     // {0 < theta < h_band}
};
ClampedTheta theta_clamped(const GridField& theta, double h_band);

// Cubic-smoothstep cutoff of the distance to the complement of U:
// 0 where dist <= h_band/2, 1 where dist >= h_band; |grad| <= ~3/h_band.
GridField cutoff_tau(const NodeMask& region, double h_band, std::shared_ptr<const Grid> grid);

}  // namespace imstab
