#include "imstab/identity.hpp"

#include <cmath>

#include "imstab/errors.hpp"
#include "imstab/quadrature.hpp"

namespace imstab {

VectorField a_gradient(const GridField& u, const MatrixCoefficient& A) {
  GridField ux = diff_x(u), uy = diff_y(u);
  auto grid = u.grid_ptr();
  VectorField out{GridField(grid), GridField(grid)};
  for (std::size_t k = 0; k < u.size(); ++k) {
    bool ok = ux.valid(k) && uy.valid(k);
    if (ok) {
      auto m = A.eval(grid->node(k));
      out.x[k] = m[0] * ux[k] + m[1] * uy[k];
      out.y[k] = m[2] * ux[k] + m[3] * uy[k];
    }
    out.x.set_valid(k, ok);
    out.y.set_valid(k, ok);
  }
  return out;
}

GridField dot(const VectorField& a, const VectorField& b) {
  GridField out = a.x * b.x + a.y * b.y;
  return out;
}

GridField energy_density(const GridField& u, const MatrixCoefficient& A) {
  VectorField agrad = a_gradient(u, A);
  GridField ux = diff_x(u), uy = diff_y(u);
  GridField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) {
    bool ok = agrad.x.valid(k) && uy.valid(k);
    out[k] = agrad.x[k] * std::conj(ux[k]) + agrad.y[k] * std::conj(uy[k]);
    out.set_valid(k, ok);
  }
  return out;
}

GridField build_test_function(const GridField& u1, const GridField& tau,
                              const GridField& theta_kh) {
  GridField out(u1.grid_ptr());
  for (std::size_t k = 0; k < u1.size(); ++k) {
    out[k] = std::conj(u1[k]) * tau[k] * theta_kh[k];
    out.set_valid(k, u1.valid(k) && tau.valid(k) && theta_kh.valid(k));
  }
  return out;
}

namespace {

NodeMask integrand_mask(const Grid& grid, std::initializer_list<const GridField*> fields) {
  NodeMask m(grid.node_count(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    bool ok = grid.kind(k) != NodeKind::exterior;
    for (const GridField* f : fields) ok = ok && f->valid(k);
    m[k] = ok;
  }
  return m;
}

void require_zero_trace(const GridField& zeta) {
  const Grid& g = zeta.grid();
  double scale = std::max(zeta.max_abs(), 1.0);
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (g.is_boundary(k) && std::abs(zeta[k]) > 1e-12 * scale)
      fail(errc::precondition, "identity", "zeta has nonzero boundary trace");
}

double rel_residual(Complex lhs, Complex rhs, double tau0 = 1e-300) {
  double denom = std::max({std::abs(lhs), std::abs(rhs), tau0});
  return std::abs(lhs - rhs) / denom;
}

}  // namespace

nlohmann::json IdentityReport::to_json() const {
  return nlohmann::json{{"lhs_re", lhs.real()},
                        {"lhs_im", lhs.imag()},
                        {"rhs_re", rhs.real()},
                        {"rhs_im", rhs.imag()},
                        {"residual", residual},
                        {"relative_residual", relative_residual},
                        {"n_cells", n_cells},
                        {"h_band", h_band}};
}

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json sect = nlohmann::json::array();
  for (const Complex& c : sector_integrals)
    sect.push_back({{"re", c.real()}, {"im", c.imag()}});
  return nlohmann::json{{"lhs", lhs},
                        {"lhs_imag_rel", lhs_imag_rel},
                        {"sector_integrals", sect},
                        {"C_tau", C_tau},
                        {"boundary_h1", boundary_h1},
                        {"sup_u1_agrad", sup_u1_agrad},
                        {"zero_order_bound", zero_order_bound},
                        {"C", C},
                        {"sigma", sigma},
                        {"four_C_over_sin", four_C_over_sin},
                        {"psi_boundary_linf", psi_boundary_linf},
                        {"w21_diff", w21_diff},
                        {"rhs", rhs},
                        {"verdict", verdict}};
}

IdentityReport key_identity_check(const GridField& u1, const GridField& u2,
                                  const Coefficient& gamma2, const Coefficient& rho,
                                  const MatrixCoefficient& A, double omega2,
                                  const GridField& psi, const GridField& zeta) {
  require_zero_trace(zeta);
  auto grid = u1.grid_ptr();

  VectorField agrad_u1 = a_gradient(u1, A);
  GridField diff = u2 - u1;
  VectorField agrad_diff = a_gradient(diff, A);
  GridField zx = diff_x(zeta), zy = diff_y(zeta);

  GridField rho_f = evaluate(rho, grid);
  GridField gamma2_f = evaluate(gamma2, grid);

  GridField lhs_integrand(grid), rhs1(grid), rhs2(grid);
  for (std::size_t k = 0; k < u1.size(); ++k) {
    lhs_integrand[k] = psi[k] * (agrad_u1.x[k] * zx[k] + agrad_u1.y[k] * zy[k]);
    rhs1[k] = gamma2_f[k] * (agrad_diff.x[k] * zx[k] + agrad_diff.y[k] * zy[k]);
    rhs2[k] = rho_f[k] * diff[k] * zeta[k];
  }
  NodeMask m = integrand_mask(*grid, {&agrad_u1.x, &agrad_diff.x, &zx, &zy});
  lhs_integrand.validity() = m;
  rhs1.validity() = m;
  rhs2.validity() = m;

  IdentityReport rep;
  rep.lhs = integrate(lhs_integrand, m);
  rep.rhs = -integrate(rhs1, m) + omega2 * integrate(rhs2, m);
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.relative_residual = rel_residual(rep.lhs, rep.rhs);
  rep.n_cells = grid->nx();
  return rep;
}

EstimateReport fundamental_estimate_check(const GridField& u1, const GridField& u2,
                                          const GridField& psi, const Coefficient& rho,
                                          const MatrixCoefficient& A, double omega2,
                                          const SectorDecomposition& sectors) {
  if (!sectors.admissible)
    fail(errc::refusal, "estimate", "sector decomposition is not admissible");
  auto grid = u1.grid_ptr();
  const Grid& g = *grid;

  GridField energy = energy_density(u1, A);
  NodeMask region = integrand_mask(g, {&energy});

  EstimateReport rep;
  rep.sigma = sectors.sigma;
  rep.C_tau = 3.0;

  // lhs and its positivity defect.
  GridField lhs_int(grid);
  for (std::size_t k = 0; k < psi.size(); ++k) lhs_int[k] = std::abs(psi[k]) * energy[k];
  lhs_int.validity() = region;
  Complex lhs_c = integrate(lhs_int, region);
  rep.lhs = lhs_c.real();
  rep.lhs_imag_rel = std::abs(lhs_c.imag()) / std::max(std::abs(lhs_c), 1e-300);

  // Per-sector signed integrals over Omega_hat_k = {theta_k >= 0}.
  for (std::size_t k = 0; k < sectors.count(); ++k) {
    GridField theta = theta_field(psi, sectors, k);
    NodeMask sector_mask(region.size(), 0);
    for (std::size_t n = 0; n < region.size(); ++n)
      sector_mask[n] = region[n] && theta[n].real() >= 0.0;
    GridField integrand(grid);
    for (std::size_t n = 0; n < psi.size(); ++n) integrand[n] = psi[n] * energy[n];
    integrand.validity() = region;
    rep.sector_integrals.push_back(integrate(integrand, sector_mask));
  }

  // The explicit constant of the estimate.
  VectorField agrad = a_gradient(u1, A);
  double sup = 0.0;
  for (std::size_t k = 0; k < u1.size(); ++k) {
    if (!agrad.x.valid(k)) continue;
    double mag = std::hypot(std::abs(agrad.x[k]), std::abs(agrad.y[k]));
    sup = std::max(sup, std::abs(u1[k]) * mag);
  }
  rep.sup_u1_agrad = sup;
  rep.boundary_h1 = g.domain().perimeter();

  GridField rho_f = evaluate(rho, grid);
  double rho_sup = 0.0;
  for (std::size_t k = 0; k < rho_f.size(); ++k)
    if (g.kind(k) != NodeKind::exterior) rho_sup = std::max(rho_sup, std::abs(rho_f[k]));
  rep.zero_order_bound = 2.0 / (rep.sigma * rep.sigma) + omega2 * rho_sup;

  rep.C = std::max(rep.C_tau * rep.boundary_h1 * rep.sup_u1_agrad, rep.zero_order_bound);
  rep.four_C_over_sin = 4.0 * rep.C / std::sin(0.5 * rep.sigma);

  rep.psi_boundary_linf = norm_linf(psi, g.boundary_mask());
  NodeMask omega_mask(g.node_count(), 0);
  for (std::size_t k = 0; k < omega_mask.size(); ++k)
    omega_mask[k] = g.kind(k) != NodeKind::exterior;
  rep.w21_diff = norm(u2 - u1, NormKind::W21, omega_mask);

  rep.rhs = rep.four_C_over_sin * (rep.psi_boundary_linf + rep.w21_diff);
  rep.verdict = rep.lhs <= rep.rhs;
  return rep;
}

IdentityReport potential_identity_check(const GridField& u1, const GridField& u2,
                                        const Coefficient& gamma, const MatrixCoefficient& A,
                                        const Coefficient& rho1, const Coefficient& rho2,
                                        double omega2, const GridField& zeta) {
  if (omega2 <= 0.0)
    fail(errc::degenerate_field, "identity", "potential identity is trivial at omega^2 = 0");
  require_zero_trace(zeta);
  auto grid = u1.grid_ptr();

  GridField diff = u2 - u1;
  // grad_{gamma A}: multiply the A-gradient by gamma nodewise.
  VectorField agrad_diff = a_gradient(diff, A);
  GridField gamma_f = evaluate(gamma, grid);
  GridField zx = diff_x(zeta), zy = diff_y(zeta);
  GridField rho1_f = evaluate(rho1, grid), rho2_f = evaluate(rho2, grid);

  GridField lhs_int(grid), rhs1(grid), rhs2(grid);
  for (std::size_t k = 0; k < u1.size(); ++k) {
    lhs_int[k] = u1[k] * (rho2_f[k] - rho1_f[k]) * zeta[k];
    rhs1[k] = gamma_f[k] * (agrad_diff.x[k] * zx[k] + agrad_diff.y[k] * zy[k]);
    rhs2[k] = rho2_f[k] * diff[k] * zeta[k];
  }
  NodeMask m = integrand_mask(*grid, {&agrad_diff.x, &zx, &zy});
  lhs_int.validity() = m;
  rhs1.validity() = m;
  rhs2.validity() = m;

  IdentityReport rep;
  rep.lhs = omega2 * integrate(lhs_int, m);
  rep.rhs = integrate(rhs1, m) - omega2 * integrate(rhs2, m);
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.relative_residual = rel_residual(rep.lhs, rep.rhs);
  rep.n_cells = grid->nx();
  return rep;
}

}  // namespace imstab
