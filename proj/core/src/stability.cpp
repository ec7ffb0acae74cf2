#include "imstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "imstab/errors.hpp"
#include "imstab/quadrature.hpp"
#include "imstab/sectors.hpp"

namespace imstab {

EtaOptimum optimize_eta(double a, double b, double r) {
  if (a < 0.0 || b < 0.0) fail(errc::precondition, "chain", "split coefficients must be >= 0");
  if (!(r > 0.0)) fail(errc::precondition, "chain", "exponent r must be positive");
  EtaOptimum out;
  if (b == 0.0) {
    // a*eta has infimum 0 at eta -> 0+.
    out.eta_star = 0.0;
    out.value = 0.0;
    out.infimum_at_zero = a > 0.0;
    return out;
  }
  if (a == 0.0) {
    out.eta_star = 1.0;
    out.value = b;
    return out;
  }
  double eta = std::pow(r * b / a, 1.0 / (r + 1.0));
  out.eta_star = std::min(1.0, eta);
  out.value = a * out.eta_star + b * std::pow(out.eta_star, -r);
  return out;
}

GnExponents gn_exponents(int n, double s) {
  if (!(s > double(n))) fail(errc::bad_exponent, "chain", "GN inequality needs s > n");
  GnExponents g;
  g.theta = std::isinf(s) ? double(n) / (n + 1.0) : n / (n + 1.0 - n / s);
  g.kappa = 1.0 - g.theta;
  return g;
}

double fit_gn_constant(std::shared_ptr<const Grid> grid, const NodeMask& v_mask, double s,
                       unsigned seed) {
  GnExponents gn = gn_exponents(2, s);
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> freq(0.5, 4.0), phase(0.0, 2.0 * M_PI),
      amp(0.2, 1.0), expo(1.0, 3.0);
  Point lo = grid->domain().bbox_min(), hi = grid->domain().bbox_max();
  double lx = hi.x - lo.x, ly = hi.y - lo.y;

  double best = 0.0;
  for (int m = 0; m < 20; ++m) {
    double a = freq(gen), b = freq(gen), p1 = phase(gen), p2 = phase(gen);
    double c = amp(gen), q = expo(gen);
    GridField f = GridField::sample(grid, [&](Point pt) {
      double bx = (pt.x - lo.x) / lx, by = (pt.y - lo.y) / ly;
      double bump = std::pow(std::max(0.0, 4.0 * bx * (1.0 - bx)), q) *
                    std::pow(std::max(0.0, 4.0 * by * (1.0 - by)), q);
      double osc = std::sin(a * pt.x + p1) * std::cos(b * pt.y + p2);
      return Complex(c * bump + (1.0 - c) * 0.5 * (osc + 1.2), 0.0);
    });
    double linf = norm_linf(f, v_mask);
    double w1s = norm(f, NormKind::W1s, v_mask, s);
    double l1 = norm(f, NormKind::L1, v_mask);
    if (w1s <= 0.0 || l1 <= 0.0) continue;
    best = std::max(best, linf / (std::pow(w1s, gn.theta) * std::pow(l1, gn.kappa)));
  }
  return best;
}

SplitBound split_bound(const GridField& density, const GridField& weight, const TubeFit& tube,
                       double eta, const NodeMask& v_mask, const StrataDecomposition& strata,
                       double R) {
  if (!(eta > 0.0 && eta <= 1.0)) fail(errc::precondition, "chain", "eta must lie in (0,1]");
  if (!(tube.C1 > 0.0 && tube.C2 > 0.0 && tube.loja.C3 > 0.0))
    fail(errc::precondition, "chain", "tube constants must be positive");
  const Grid& g = density.grid();

  SplitBound sb;
  sb.r = tube.loja.r;
  sb.a = tube.C1 * norm_linf(density, v_mask);
  GridField prod(density.grid_ptr());
  for (std::size_t k = 0; k < prod.size(); ++k) {
    prod[k] = density[k] * weight[k];
    prod.set_valid(k, density.valid(k) && weight.valid(k));
  }
  NodeMask vw(v_mask.size(), 0);
  for (std::size_t k = 0; k < vw.size(); ++k) vw[k] = v_mask[k] && prod.valid(k);
  sb.b = integrate(prod, vw).real() / (std::pow(tube.C2, sb.r) * tube.loja.C3);
  sb.value = sb.a * eta + sb.b * std::pow(eta, -sb.r);

  NodeMask v_density(v_mask.size(), 0);
  for (std::size_t k = 0; k < vw.size(); ++k) v_density[k] = v_mask[k] && density.valid(k);
  sb.lhs_integral = integrate(density, v_density).real();

  // Cells straddling the slab boundary belong to neither side of the split;
  // their area bounds the quadrature defect of the inequality.
  NodeMask cover = build_slab_cover(strata, eta, R, g);
  double straddle = 0.0;
  for (int cj = 0; cj < g.ny(); ++cj)
    for (int ci = 0; ci < g.nx(); ++ci) {
      std::size_t k00 = g.index(ci, cj), k10 = g.index(ci + 1, cj);
      std::size_t k01 = g.index(ci, cj + 1), k11 = g.index(ci + 1, cj + 1);
      if (!(v_density[k00] && v_density[k10] && v_density[k01] && v_density[k11])) continue;
      int inside = cover[k00] + cover[k10] + cover[k01] + cover[k11];
      if (inside != 0 && inside != 4) straddle += g.cell_area();
    }
  sb.tolerance = straddle * norm_linf(density, v_mask);
  sb.holds = sb.lhs_integral <= sb.value + sb.tolerance + 1e-12;
  return sb;
}

HolderCertificate holder_certificate(const ChainInputs& in) {
  if (!(in.gn_kappa > 0.0 && in.gn_kappa < 1.0))
    fail(errc::precondition, "chain", "kappa must lie in (0,1)");
  HolderCertificate cert;
  cert.noncritical = in.noncritical;
  cert.gn_theta = in.gn_theta;
  cert.gn_kappa = in.gn_kappa;
  cert.gn_constant = in.gn_constant;
  double kappa = in.gn_kappa;
  double c_psi_prime = in.gn_constant * std::pow(in.w1s_v, in.gn_theta);

  if (in.noncritical) {
    if (!(in.min_weight > 0.0))
      fail(errc::precondition, "chain", "noncritical mode needs min_V weight > 0");
    cert.split_min = in.weighted_integral_v / in.min_weight;
    cert.eta_star = 0.0;
    if (in.mode == Mode::gamma) {
      cert.alpha = kappa;
      cert.C_psi = c_psi_prime * std::pow(in.min_weight, -kappa);
      cert.C_final = cert.C_psi * std::pow(in.estimate_factor, cert.alpha);
    } else {
      cert.alpha = 0.5 * kappa;
      cert.C_psi = c_psi_prime * std::pow(in.area_v, 0.5 * kappa) *
                   std::pow(in.min_weight, -0.5 * kappa);
      cert.C_final = cert.C_psi * std::pow(in.estimate_factor, cert.alpha);
    }
  } else {
    if (!(in.r > 0.0)) fail(errc::precondition, "chain", "Lojasiewicz exponent must be positive");
    double r = in.r;
    double a = in.C1 * in.density_linf_v;
    double b = in.weighted_integral_v / (std::pow(in.C2, r) * in.C3);
    EtaOptimum opt = optimize_eta(a, b, r);
    cert.eta_star = opt.eta_star;
    cert.split_min = opt.value;

    double p = 1.0 / (r + 1.0);
    double denom = std::pow(in.density_linf_v, r * p) * std::pow(in.weighted_integral_v, p);
    cert.C_l2_effective = denom > 0.0 ? cert.split_min / denom : 0.0;

    // Consistency probe: the eta-optimum closed form against the direct
    // integral, both raised to the certificate's exponent.
    double c_r = std::pow(r, p) + std::pow(r, -r * p);
    double c_l2_closed =
        c_r * std::pow(in.C1, r * p) * std::pow(std::pow(in.C2, r) * in.C3, -p);
    cert.intermediate_direct = std::pow(in.weighted_integral_v, kappa * p);
    double den2 = c_l2_closed * std::pow(in.density_linf_v, r * p);
    cert.intermediate_via_eta =
        den2 > 0.0 ? std::pow(cert.split_min / den2, kappa) : 0.0;

    if (in.mode == Mode::gamma) {
      cert.alpha = kappa * p;
      cert.C_psi =
          c_psi_prime * std::pow(cert.C_l2_effective * std::pow(in.density_linf_v, r * p), kappa);
      cert.C_final = cert.C_psi * std::pow(in.estimate_factor, cert.alpha);
    } else {
      cert.alpha = 0.5 * kappa * p;
      cert.C_psi = c_psi_prime * std::pow(in.area_v, 0.5 * kappa) *
                   std::pow(cert.C_l2_effective * std::pow(in.density_linf_v, r * p), 0.5 * kappa);
      cert.C_final = cert.C_psi * std::pow(in.estimate_factor, cert.alpha);
    }
  }
  if (!(cert.alpha > 0.0 && cert.alpha < 1.0))
    fail(errc::precondition, "chain", "alpha fell outside (0,1)");
  cert.lhs = in.lhs_norm;
  cert.rhs = in.rhs_norm;
  cert.verdict = cert.lhs <= cert.C_final * std::pow(cert.rhs, cert.alpha) * (1.0 + 1e-12) ||
                 cert.lhs == 0.0;
  return cert;
}

namespace {

// Flux-form div(c grad u) at an interior node, c evaluated at face midpoints.
Complex flux_div_at(const GridField& u, int i, int j,
                    const std::function<std::array<Complex, 4>(Point)>& coeff) {
  const Grid& g = u.grid();
  double hx = g.hx(), hy = g.hy();
  Point p = g.node(i, j);
  auto cE = coeff({p.x + 0.5 * hx, p.y});
  auto cW = coeff({p.x - 0.5 * hx, p.y});
  auto cN = coeff({p.x, p.y + 0.5 * hy});
  auto cS = coeff({p.x, p.y - 0.5 * hy});
  Complex r = (cE[0] * (u.at(i + 1, j) - u.at(i, j)) - cW[0] * (u.at(i, j) - u.at(i - 1, j))) /
                  (hx * hx) +
              (cN[3] * (u.at(i, j + 1) - u.at(i, j)) - cS[3] * (u.at(i, j) - u.at(i, j - 1))) /
                  (hy * hy);
  Complex dyE = u.at(i, j + 1) - u.at(i, j - 1) + u.at(i + 1, j + 1) - u.at(i + 1, j - 1);
  Complex dyW = u.at(i, j + 1) - u.at(i, j - 1) + u.at(i - 1, j + 1) - u.at(i - 1, j - 1);
  Complex dxN = u.at(i + 1, j) - u.at(i - 1, j) + u.at(i + 1, j + 1) - u.at(i - 1, j + 1);
  Complex dxS = u.at(i + 1, j) - u.at(i - 1, j) + u.at(i + 1, j - 1) - u.at(i - 1, j - 1);
  r += (cE[1] * dyE - cW[1] * dyW) / (4.0 * hx * hy);
  r += (cN[2] * dxN - cS[2] * dxS) / (4.0 * hx * hy);
  return r;
}

bool stencil_ok(const GridField& u, const Grid& g, int i, int j) {
  if (i < 1 || i >= g.nx() || j < 1 || j >= g.ny()) return false;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      std::size_t k = g.index(i + di, j + dj);
      if (!u.valid(k) || g.kind(k) == NodeKind::exterior) return false;
    }
  return true;
}

}  // namespace

Reconstruction reconstruct_rho(const GridField& u, const Coefficient& gamma,
                               const MatrixCoefficient& A, double omega2, double u_floor) {
  if (!(omega2 > 0.0)) fail(errc::precondition, "reconstruct", "omega^2 must be positive");
  auto grid = u.grid_ptr();
  const Grid& g = *grid;
  if (u.max_abs() == 0.0)
    fail(errc::empty_reconstruction, "reconstruct", "measurement is identically zero");
  double floor_abs = u_floor * u.max_abs();

  auto coeff = [&](Point p) {
    auto m = A.eval(p);
    Complex gv = gamma.eval(p);
    return std::array<Complex, 4>{gv * m[0], gv * m[1], gv * m[2], gv * m[3]};
  };

  Reconstruction out{GridField(grid), NodeMask(g.node_count(), 0), 0};
  std::size_t kept = 0;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    out.field.set_valid(k, false);
    if (!g.is_interior(k)) continue;
    int i = g.node_i(k), j = g.node_j(k);
    if (!stencil_ok(u, g, i, j)) continue;
    if (std::abs(u[k]) < floor_abs) {
      ++out.masked_out;
      continue;
    }
    out.field[k] = -flux_div_at(u, i, j, coeff) / (omega2 * u[k]);
    out.field.set_valid(k, true);
    out.mask[k] = 1;
    ++kept;
  }
  if (kept == 0)
    fail(errc::empty_reconstruction, "reconstruct", "every node fell below the |u| floor");
  return out;
}

Reconstruction reconstruct_gamma_march(const GridField& u, const Coefficient& rho,
                                       const MatrixCoefficient& A, double omega2,
                                       const Coefficient& gamma_inflow, double grad_floor,
                                       int direction) {
  auto grid = u.grid_ptr();
  const Grid& g = *grid;
  if (g.domain().shape() != Domain::Shape::rectangle)
    fail(errc::precondition, "reconstruct", "marching is implemented on rectangle domains");
  if (direction != 1 && direction != -1)
    fail(errc::precondition, "reconstruct", "direction must be +1 or -1");

  VectorField F = a_gradient(u, A);
  auto coeffA = [&](Point p) { return A.eval(p); };

  Reconstruction out{GridField(grid), NodeMask(g.node_count(), 0), 0};
  for (std::size_t k = 0; k < g.node_count(); ++k) out.field.set_valid(k, false);

  double hx = g.hx(), hy = g.hy();
  int inflow = direction > 0 ? 0 : g.nx();
  for (int j = 0; j <= g.ny(); ++j) {
    std::size_t k = g.index(inflow, j);
    out.field[k] = gamma_inflow.eval(g.node(inflow, j));
    out.field.set_valid(k, true);
    out.mask[k] = 1;
  }

  double step = direction * hx;
  for (int m = 1; m < g.nx(); ++m) {
    int i = direction > 0 ? m : g.nx() - m;
    for (int j = 1; j < g.ny(); ++j) {
      std::size_t k = g.index(i, j);
      std::size_t up = g.index(i - direction, j);
      if (!stencil_ok(u, g, i, j)) continue;
      Complex F1 = F.x[k], F2 = F.y[k];
      if (std::abs(F1) < grad_floor || !out.field.valid(up)) {
        ++out.masked_out;
        continue;
      }
      // Lagged transverse derivative from the previous column.
      Complex dgdy(0, 0);
      bool hi_ok = out.field.valid(g.index(i - direction, j + 1));
      bool lo_ok = out.field.valid(g.index(i - direction, j - 1));
      if (hi_ok && lo_ok)
        dgdy = (out.field[g.index(i - direction, j + 1)] -
                out.field[g.index(i - direction, j - 1)]) /
               (2.0 * hy);
      else if (hi_ok)
        dgdy = (out.field[g.index(i - direction, j + 1)] - out.field[up]) / hy;
      else if (lo_ok)
        dgdy = (out.field[up] - out.field[g.index(i - direction, j - 1)]) / hy;

      Complex divF = flux_div_at(u, i, j, coeffA);
      Point p = g.node(i, j);
      Complex rhs = -omega2 * rho.eval(p) * u[k] + F1 / step * out.field[up] - F2 * dgdy;
      Complex denom = F1 / step + divF;
      if (std::abs(denom) < grad_floor / hx * 0.5) {
        ++out.masked_out;
        continue;
      }
      out.field[k] = rhs / denom;
      out.field.set_valid(k, true);
      out.mask[k] = 1;
    }
  }
  std::size_t kept = 0;
  for (auto v : out.mask) kept += v;
  if (kept == 0)
    fail(errc::empty_reconstruction, "reconstruct", "marching produced no valid nodes");
  return out;
}

namespace {

double l1_norm(const GridField& f, const NodeMask& mask) {
  NodeMask m(mask.size(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = mask[k] && f.valid(k);
  return integrate(f.abs(), m).real();
}

double w11_norm(const GridField& f, const NodeMask& mask) {
  return l1_norm(f, mask) + l1_norm(diff_x(f), mask) + l1_norm(diff_y(f), mask);
}

NodeMask non_exterior(const Grid& g) {
  NodeMask m(g.node_count(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = g.kind(k) != NodeKind::exterior;
  return m;
}

}  // namespace

StabilityReport run_experiment(const ExperimentConfig& cfg, double amplitude,
                               const FieldSink* sink) {
  StabilityReport rep;
  rep.id = cfg.id;
  rep.mode = cfg.mode;
  rep.amplitude = amplitude;
  rep.sigma = cfg.sigma;
  rep.config_echo = cfg.echo;

  auto grid = build_grid(cfg.domain, cfg.n_cells);
  const Grid& g = *grid;
  double diam = cfg.domain.diameter();

  ProblemSpec p1 = cfg.problem1;
  p1.sigma = cfg.sigma;
  ProblemSpec p2 = cfg.problem2;
  p2.sigma = cfg.sigma;
  // Only the identified coefficient may differ between the two problems.
  if (cfg.mode == Mode::gamma) {
    p2.rho = p1.rho;
    p2.A = p1.A;
    p2.omega2 = p1.omega2;
    if (amplitude != 1.0)
      p2.gamma = std::make_shared<BlendCoefficient>(p1.gamma, p2.gamma, amplitude);
  } else {
    p2.gamma = p1.gamma;
    p2.A = p1.A;
    p2.omega2 = p1.omega2;
    if (!(p1.omega2 > 0.0))
      fail(errc::precondition, "experiment", "rho mode requires omega^2 > 0");
    if (amplitude != 1.0)
      p2.rho = std::make_shared<BlendCoefficient>(p1.rho, p2.rho, amplitude);
  }

  auto [u1, rep1] = solve_forward(p1, grid);
  auto [u2, rep2] = solve_forward(p2, grid);
  rep.solve1 = rep1;
  rep.solve2 = rep2;

  NodeMask omega_mask = non_exterior(g);
  NodeMask w_mask = g.shrink_mask(cfg.margin_w * diam);
  NodeMask v_mask = g.shrink_mask(cfg.margin_v * diam);
  NodeMask d_mask = g.shrink_mask(cfg.margin_d * diam);
  NodeMask u_region = g.shrink_mask(cfg.margin_u * diam);

  GridField psi = cfg.mode == Mode::gamma ? psi_field(*p1.gamma, *p2.gamma, grid)
                                          : psi_field(*p1.rho, *p2.rho, grid);
  GridField diff = u2 - u1;
  if (sink) {
    (*sink)("u1", u1);
    (*sink)("u2", u2);
    (*sink)("psi", psi);
  }

  rep.psi_linf_omega_d = norm_linf(psi, d_mask);
  rep.psi_linf_boundary = norm_linf(psi, g.boundary_mask());
  rep.diff_w21 = norm(diff, NormKind::W21, omega_mask);
  rep.diff_w11 = w11_norm(diff, omega_mask);

  GridField tau = cutoff_tau(u_region, cfg.h_band, grid);

  ChainInputs chain;
  chain.mode = cfg.mode;
  GnExponents gn = gn_exponents(2, cfg.s);
  chain.gn_theta = gn.theta;
  chain.gn_kappa = gn.kappa;
  chain.gn_constant = fit_gn_constant(grid, v_mask, cfg.s, cfg.gn_seed);
  chain.lhs_norm = rep.psi_linf_omega_d;

  double R = cfg.R > 0.0 ? cfg.R : std::max(cfg.domain.x_extent(), cfg.domain.y_extent());

  GridField weight(grid);   // A grad u1 . conj grad u1  (gamma) or |u1|^2 (rho)
  GridField density(grid);  // |psi| (gamma) or |psi|^2 (rho)
  CriticalSet z;

  if (cfg.mode == Mode::gamma) {
    SectorDecomposition sectors = sector_decompose(psi, cfg.sigma, omega_mask);
    if (!sectors.admissible)
      fail(errc::refusal, "sectors",
           "pair is not admissible; witness angle " + std::to_string(sectors.witness_angle) +
               " carries H1 measure " + std::to_string(sectors.witness_measure));
    rep.sector_angles = sectors.angles;

    GridField ones(grid, Complex(1.0, 0.0));
    GridField zeta = build_test_function(u1, tau, ones);
    rep.identity = key_identity_check(u1, u2, *p2.gamma, *p1.rho, p1.A, p1.omega2, psi, zeta);
    rep.identity.h_band = cfg.h_band;
    rep.estimate =
        fundamental_estimate_check(u1, u2, psi, *p1.rho, p1.A, p1.omega2, sectors);

    weight = energy_density(u1, p1.A).real_part();
    density = psi.abs();
    chain.estimate_factor = rep.estimate.four_C_over_sin;
    chain.rhs_norm = rep.psi_linf_boundary + rep.diff_w21;
    chain.weighted_integral_omega = rep.estimate.lhs;

    double tau_z = default_critical_threshold(u1, w_mask) * cfg.tau_z_factor / 10.0;
    z = detect_critical_set(u1, w_mask, std::max(tau_z, 1e-300));
  } else {
    // Test choice zeta = tau * conj(u1 (rho2 - rho1)): the weighted mass of
    // the difference becomes the nonnegative left-hand side.
    GridField zeta(grid);
    for (std::size_t k = 0; k < psi.size(); ++k) zeta[k] = tau[k] * std::conj(u1[k] * psi[k]);
    rep.identity =
        potential_identity_check(u1, u2, *p1.gamma, p1.A, *p1.rho, *p2.rho, p1.omega2, zeta);
    rep.identity.h_band = cfg.h_band;

    for (std::size_t k = 0; k < weight.size(); ++k) {
      weight[k] = Complex(std::norm(u1[k]), 0.0);
      density[k] = Complex(std::norm(psi[k]), 0.0);
    }

    // ||u2-u1||_{W^{1,1}} controls omega^2 int tau |u1 psi|^2 with the
    // explicit constant max(sup |gamma (A^T grad zeta)|, omega^2 sup |rho2 zeta|).
    GridField zx = diff_x(zeta), zy = diff_y(zeta);
    GridField gamma_f = evaluate(*p1.gamma, grid);
    GridField rho2_f = evaluate(*p2.rho, grid);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < zeta.size(); ++k) {
      if (!zx.valid(k) || !zy.valid(k) || !omega_mask[k]) continue;
      auto a = p1.A.eval(g.node(k));
      Complex w1 = a[0] * zx[k] + a[2] * zy[k];  // A^T row 1
      Complex w2 = a[1] * zx[k] + a[3] * zy[k];
      double wmax = std::max(std::abs(w1), std::abs(w2));
      m1 = std::max(m1, std::abs(gamma_f[k]) * wmax);
      m2 = std::max(m2, std::abs(rho2_f[k] * zeta[k]));
    }
    rep.rho_estimate_factor = std::max(m1, p1.omega2 * m2);

    GridField integrand(grid);
    for (std::size_t k = 0; k < integrand.size(); ++k)
      integrand[k] = tau[k] * density[k] * weight[k];
    NodeMask im(omega_mask.size(), 0);
    for (std::size_t k = 0; k < im.size(); ++k) im[k] = omega_mask[k];
    double tau_int = integrate(integrand, im).real();
    rep.rho_estimate_lhs = p1.omega2 * tau_int;
    rep.rho_estimate_verdict =
        rep.rho_estimate_lhs <= rep.rho_estimate_factor * rep.diff_w11 * (1.0 + 1e-12);

    chain.estimate_factor = rep.rho_estimate_factor / p1.omega2;
    chain.rhs_norm = rep.diff_w11;
    chain.weighted_integral_omega = tau_int;
    chain.area_v = mask_area(g, v_mask);

    double tau_u = cfg.tau_z_factor * g.h() *
                   norm_linf(gradient_magnitude(u1), w_mask);
    z = detect_small_values(u1, w_mask, std::max(tau_u, 1e-300));
  }

  // Shared tail: critical geometry and the chain.
  chain.density_linf_v = norm_linf(density, v_mask);
  {
    GridField prod(grid);
    for (std::size_t k = 0; k < prod.size(); ++k) {
      prod[k] = density[k] * weight[k];
      prod.set_valid(k, density.valid(k) && weight.valid(k));
    }
    NodeMask vw(v_mask.size(), 0);
    for (std::size_t k = 0; k < vw.size(); ++k) vw[k] = v_mask[k] && prod.valid(k);
    chain.weighted_integral_v = integrate(prod, vw).real();
  }
  chain.w1s_v = norm(psi, NormKind::W1s, v_mask, cfg.s);

  rep.noncritical = z.empty();
  chain.noncritical = rep.noncritical;
  if (!rep.noncritical) {
    StrataDecomposition strata = extract_strata(z, g);
    rep.tube = fit_tube_constants(strata, z, g, cfg.etas, R);
    rep.tube.loja = fit_lojasiewicz(weight, z, v_mask, cfg.fit_fraction);
    chain.r = rep.tube.loja.r;
    chain.C1 = rep.tube.C1;
    chain.C2 = rep.tube.C2;
    chain.C3 = rep.tube.loja.C3;
    for (double eta : cfg.etas) {
      SplitBound sb = split_bound(density, weight, rep.tube, eta, v_mask, strata, R);
      if (!sb.holds)
        fail(errc::precondition, "chain",
             "split bound failed at eta = " + std::to_string(eta));
    }
  } else {
    double mw = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < weight.size(); ++k)
      if (v_mask[k] && weight.valid(k)) mw = std::min(mw, weight[k].real());
    chain.min_weight = mw;
  }

  rep.chain = holder_certificate(chain);
  rep.C_calibrated = rep.chain.C_final;
  rep.calibrated_verdict = rep.chain.verdict;
  return rep;
}

std::vector<StabilityReport> run_family(const ExperimentConfig& cfg, int workers,
                                        const FieldSink* sink) {
  std::vector<double> amps = cfg.family_amplitudes;
  if (amps.empty()) amps = {1.0};
  std::sort(amps.begin(), amps.end());

  std::vector<StabilityReport> reports(amps.size());
  if (workers > 1 && amps.size() > 1) {
    std::vector<std::future<StabilityReport>> futs;
    for (std::size_t k = 0; k < amps.size(); ++k) {
      const FieldSink* s = k + 1 == amps.size() ? sink : nullptr;
      double a = amps[k];
      futs.push_back(
          std::async(std::launch::async, [&cfg, a, s] { return run_experiment(cfg, a, s); }));
    }
    for (std::size_t k = 0; k < futs.size(); ++k) reports[k] = futs[k].get();
  } else {
    for (std::size_t k = 0; k < amps.size(); ++k)
      reports[k] = run_experiment(cfg, amps[k], k + 1 == amps.size() ? sink : nullptr);
  }

  // One constant, calibrated at the largest amplitude, must cover the family.
  const StabilityReport& top = reports.back();
  double alpha = top.chain.alpha;
  double c_cal = top.chain.C_final;
  if (top.chain.lhs > 0.0 && top.chain.rhs > 0.0)
    c_cal = top.chain.lhs / std::pow(top.chain.rhs, alpha);
  for (StabilityReport& r : reports) {
    r.C_calibrated = c_cal;
    r.calibrated_verdict =
        r.chain.lhs <= c_cal * std::pow(r.chain.rhs, alpha) * (1.0 + 1e-9) || r.chain.lhs == 0.0;
  }
  return reports;
}

nlohmann::json StabilityReport::to_json() const {
  nlohmann::json solve = {
      {"solve1",
       {{"iterations", solve1.iterations},
        {"relative_residual", solve1.relative_residual},
        {"solver_id", solve1.solver_id},
        {"condition_estimate", solve1.condition_estimate}}},
      {"solve2",
       {{"iterations", solve2.iterations},
        {"relative_residual", solve2.relative_residual},
        {"solver_id", solve2.solver_id},
        {"condition_estimate", solve2.condition_estimate}}}};
  nlohmann::json j{
      {"id", id},
      {"mode", mode == Mode::gamma ? "gamma" : "rho"},
      {"amplitude", amplitude},
      {"norms",
       {{"psi_linf_omega_d", psi_linf_omega_d},
        {"psi_linf_boundary", psi_linf_boundary},
        {"diff_w21", diff_w21},
        {"diff_w11", diff_w11}}},
      {"solver", solve},
      {"identity", identity.to_json()},
      {"sigma", sigma},
      {"sector_angles", sector_angles},
      {"noncritical", noncritical},
      {"tube", tube.to_json()},
      {"chain",
       {{"alpha", chain.alpha},
        {"C_final", chain.C_final},
        {"C_psi", chain.C_psi},
        {"C_l2_effective", chain.C_l2_effective},
        {"gn_theta", chain.gn_theta},
        {"gn_kappa", chain.gn_kappa},
        {"gn_constant", chain.gn_constant},
        {"eta_star", chain.eta_star},
        {"split_min", chain.split_min},
        {"lhs", chain.lhs},
        {"rhs", chain.rhs},
        {"verdict", chain.verdict},
        {"noncritical", chain.noncritical}}},
      {"calibrated", {{"C", C_calibrated}, {"verdict", calibrated_verdict}}},
      {"config", config_echo}};
  if (mode == Mode::gamma) {
    j["estimate"] = estimate.to_json();
  } else {
    j["rho_estimate"] = {{"lhs", rho_estimate_lhs},
                         {"factor", rho_estimate_factor},
                         {"verdict", rho_estimate_verdict}};
  }
  return j;
}

std::string StabilityReport::csv_row() const {
  std::ostringstream os;
  os << id << ',' << chain.lhs << ',' << chain.rhs << ',' << chain.alpha << ',' << chain.C_final
     << ',' << (chain.verdict && calibrated_verdict ? "pass" : "fail");
  return os.str();
}

}  // namespace imstab
