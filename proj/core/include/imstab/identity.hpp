#pragma once

#include <nlohmann/json.hpp>

#include "imstab/problem.hpp"
#include "imstab/sectors.hpp"

namespace imstab {

struct VectorField {
  GridField x;
  GridField y;
};

// A grad u with central differences; valid where both differences are.
VectorField a_gradient(const GridField& u, const MatrixCoefficient& A);

// Unconjugated dot of two complex vector fields: sum_k a_k b_k.
GridField dot(const VectorField& a, const VectorField& b);

// A grad u . conj(grad u): real nonnegative for Hermitian positive A.
GridField energy_density(const GridField& u, const MatrixCoefficient& A);

struct IdentityReport {
  Complex lhs{};
  Complex rhs{};
  double residual = 0.0;
  double relative_residual = 0.0;
  int n_cells = 0;
  double h_band = 0.0;
  nlohmann::json to_json() const;
};

struct EstimateReport {
  double lhs = 0.0;                       // int |psi| A grad u1 . conj grad u1
  double lhs_imag_rel = 0.0;              // positivity check residue
  std::vector<Complex> sector_integrals;  // per sector, signed
  double C_tau = 3.0;
  double boundary_h1 = 0.0;               // H_1(dOmega)
  double sup_u1_agrad = 0.0;              // ||conj(u1)|A grad u1|||_inf
  double zero_order_bound = 0.0;          // 2/sigma^2 + omega^2 ||rho||_inf
  double C = 0.0;
  double sigma = 0.0;
  double four_C_over_sin = 0.0;
  double psi_boundary_linf = 0.0;
  double w21_diff = 0.0;
  double rhs = 0.0;
  bool verdict = false;
  nlohmann::json to_json() const;
};

// zeta = conj(u1) * tau * theta_kh.
GridField build_test_function(const GridField& u1, const GridField& tau,
                              const GridField& theta_kh);

// Both sides of the key identity by independent quadratures; zeta must have
// zero boundary trace.
IdentityReport key_identity_check(const GridField& u1, const GridField& u2,
                                  const Coefficient& gamma2, const Coefficient& rho,
                                  const MatrixCoefficient& A, double omega2,
                                  const GridField& psi, const GridField& zeta);

// The fundamental estimate with the explicit constant
// C = max{ C_tau H_1(dOmega) ||conj(u1)|A grad u1|||_inf, 2/sigma^2 + omega^2 ||rho||_inf }.
EstimateReport fundamental_estimate_check(const GridField& u1, const GridField& u2,
                                          const GridField& psi, const Coefficient& rho,
                                          const MatrixCoefficient& A, double omega2,
                                          const SectorDecomposition& sectors);

// omega^2 int u1 (rho2 - rho1) zeta = int (gamma A) grad(u2-u1) . grad zeta
//                                     - omega^2 int rho2 (u2-u1) zeta.
IdentityReport potential_identity_check(const GridField& u1, const GridField& u2,
                                        const Coefficient& gamma, const MatrixCoefficient& A,
                                        const Coefficient& rho1, const Coefficient& rho2,
                                        double omega2, const GridField& zeta);

}  // namespace imstab
