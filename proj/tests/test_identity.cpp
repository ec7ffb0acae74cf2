#include <doctest.h>

#include <cmath>

#include "imstab/errors.hpp"
#include "imstab/identity.hpp"
#include "imstab/quadrature.hpp"
#include "imstab/sectors.hpp"
#include "imstab/solver.hpp"
#include "support/helpers.hpp"

using namespace imstab;
using namespace imstab::testing;

namespace {

CoefPtr cf(const std::string& expr) {
  return std::make_shared<CoefficientField>(CoefficientField::from_expr(expr));
}

ProblemSpec unit_spec(const std::string& gamma, double omega2, const std::string& g) {
  ProblemSpec p;
  p.gamma = cf(gamma);
  p.rho = cf("1");
  p.omega2 = omega2;
  p.g = parse_expr(g);
  return p;
}

struct Pair {
  std::shared_ptr<const Grid> grid;
  GridField u1, u2, psi, zeta;
  ProblemSpec p1, p2;
};

// The real-perturbation benchmark pair on the unit square.
Pair make_pair(int n, const std::string& gamma2_expr) {
  Pair out{rect_grid(1.0, 1.0, n), {}, {}, {}, {}, {}, {}};
  out.p1 = unit_spec("1", 1.0, "exp(i*x1)");
  out.p2 = unit_spec(gamma2_expr, 1.0, "exp(i*x1)");
  auto [u1, r1] = solve_forward(out.p1, out.grid);
  auto [u2, r2] = solve_forward(out.p2, out.grid);
  out.u1 = u1;
  out.u2 = u2;
  out.psi = psi_field(*out.p1.gamma, *out.p2.gamma, out.grid);
  GridField tau = cutoff_tau(out.grid->shrink_mask(0.05), 0.2, out.grid);
  GridField ones(out.grid, Complex(1.0, 0.0));
  out.zeta = build_test_function(u1, tau, ones);
  return out;
}

const char* kBump = "1+0.1*x1*(1-x1)*x2*(1-x2)";

}  // namespace

TEST_CASE("build_test_function: products and trivial cases") {
  auto g = rect_grid(1.0, 1.0, 16);
  GridField zero(g), one(g, Complex(1, 0));
  GridField u = sample(g, [](double x, double) { return std::polar(1.0, x); });
  CHECK(build_test_function(u, zero, one).max_abs() == 0.0);
  CHECK(build_test_function(one, one, one).max_abs() == doctest::Approx(1.0));

  GridField tau = sample(g, [](double x, double y) { return Complex(x * y, 0.0); });
  GridField th = sample(g, [](double x, double) { return Complex(0.5 + 0.2 * x, 0.0); });
  GridField z = build_test_function(u, tau, th);
  for (std::size_t k = 0; k < z.size(); ++k)
    CHECK(std::abs(z[k] - std::conj(u[k]) * tau[k] * th[k]) < 1e-15);
}

TEST_CASE("key identity: identical problems vanish exactly") {
  Pair pr = make_pair(32, "1");
  IdentityReport rep =
      key_identity_check(pr.u1, pr.u1, *pr.p1.gamma, *pr.p1.rho, pr.p1.A, 1.0, pr.psi, pr.zeta);
  CHECK(rep.lhs == Complex(0, 0));
  CHECK(rep.rhs == Complex(0, 0));
  CHECK(rep.residual == 0.0);
}

TEST_CASE("key identity: residual decays at first order or better") {
  std::vector<double> hs, res;
  for (int n : {32, 64, 128}) {
    Pair pr = make_pair(n, kBump);
    IdentityReport rep =
        key_identity_check(pr.u1, pr.u2, *pr.p2.gamma, *pr.p1.rho, pr.p1.A, 1.0, pr.psi, pr.zeta);
    hs.push_back(pr.grid->h());
    res.push_back(rep.relative_residual);
  }
  CHECK(loglog_slope(hs, res) >= 0.8);
  CHECK(res.back() < 0.05);
}

TEST_CASE("key identity: nonzero trace is rejected") {
  Pair pr = make_pair(16, kBump);
  GridField bad(pr.grid, Complex(1.0, 0.0));
  CHECK_THROWS_AS(
      key_identity_check(pr.u1, pr.u2, *pr.p2.gamma, *pr.p1.rho, pr.p1.A, 1.0, pr.psi, bad),
      Error);
}

TEST_CASE("key identity: scaling covariance at lambda = 2") {
  Pair base = make_pair(48, kBump);
  Pair scaled = base;
  scaled.p1.g = parse_expr("2*exp(i*x1)");
  scaled.p2.g = parse_expr("2*exp(i*x1)");
  auto [u1s, r1] = solve_forward(scaled.p1, scaled.grid);
  auto [u2s, r2] = solve_forward(scaled.p2, scaled.grid);
  GridField tau = cutoff_tau(base.grid->shrink_mask(0.05), 0.2, base.grid);
  GridField ones(base.grid, Complex(1.0, 0.0));
  GridField zeta_s = build_test_function(u1s, tau, ones);

  IdentityReport a = key_identity_check(base.u1, base.u2, *base.p2.gamma, *base.p1.rho,
                                        base.p1.A, 1.0, base.psi, base.zeta);
  IdentityReport b =
      key_identity_check(u1s, u2s, *base.p2.gamma, *base.p1.rho, base.p1.A, 1.0, base.psi, zeta_s);
  CHECK(std::abs(b.lhs) == doctest::Approx(4.0 * std::abs(a.lhs)).epsilon(1e-6));
  CHECK(b.residual == doctest::Approx(4.0 * a.residual).epsilon(1e-5));

  NodeMask omega = domain_nodes(*base.grid);
  double w21 = norm(base.u2 - base.u1, NormKind::W21, omega);
  double w21s = norm(u2s - u1s, NormKind::W21, omega);
  CHECK(w21s == doctest::Approx(2.0 * w21).epsilon(1e-8));
}

TEST_CASE("fundamental estimate: identical pair passes with zero lhs") {
  Pair pr = make_pair(32, "1");
  SectorDecomposition sec = sector_decompose(pr.psi, 0.1 * M_PI, domain_nodes(*pr.grid));
  REQUIRE(sec.admissible);
  EstimateReport rep =
      fundamental_estimate_check(pr.u1, pr.u1, pr.psi, *pr.p1.rho, pr.p1.A, 1.0, sec);
  CHECK(rep.lhs == doctest::Approx(0.0));
  CHECK(rep.verdict);
}

TEST_CASE("fundamental estimate: real and complex admissible pairs") {
  for (const char* gamma2 :
       {kBump, "1+(1+0.5*i)*0.1*x1*(1-x1)*x2*(1-x2)", "1+(0.8+0.6*i)*0.05*x1*(1-x1)*x2*(1-x2)"}) {
    Pair pr = make_pair(48, gamma2);
    SectorDecomposition sec = sector_decompose(pr.psi, 0.1 * M_PI, domain_nodes(*pr.grid));
    REQUIRE(sec.admissible);
    EstimateReport rep =
        fundamental_estimate_check(pr.u1, pr.u2, pr.psi, *pr.p1.rho, pr.p1.A, 1.0, sec);
    CHECK(rep.verdict);
    CHECK(rep.lhs >= 0.0);
    CHECK(rep.lhs_imag_rel <= 1e-10);
    CHECK(rep.lhs < rep.rhs);
    // The explicit constant pieces are all populated.
    CHECK(rep.C_tau == 3.0);
    CHECK(rep.boundary_h1 == doctest::Approx(4.0));
    CHECK(rep.C >= rep.zero_order_bound);
    CHECK(rep.four_C_over_sin == doctest::Approx(4.0 * rep.C / std::sin(0.05 * M_PI)));
  }
}

TEST_CASE("fundamental estimate: refuses non-admissible sectors") {
  Pair pr = make_pair(16, kBump);
  SectorDecomposition bad;
  bad.admissible = false;
  CHECK_THROWS_AS(
      fundamental_estimate_check(pr.u1, pr.u2, pr.psi, *pr.p1.rho, pr.p1.A, 1.0, bad), Error);
}

TEST_CASE("fundamental estimate: sector additivity of the weighted integral") {
  Pair pr = make_pair(48, "1+(1+0.5*i)*0.1*x1*(1-x1)*x2*(1-x2)");
  SectorDecomposition sec = sector_decompose(pr.psi, 0.1 * M_PI, domain_nodes(*pr.grid));
  REQUIRE(sec.admissible);
  GridField energy = energy_density(pr.u1, pr.p1.A);
  NodeMask base(pr.grid->node_count(), 0);
  for (std::size_t k = 0; k < base.size(); ++k)
    base[k] = pr.grid->kind(k) != NodeKind::exterior && energy.valid(k);

  GridField integrand(pr.grid);
  for (std::size_t k = 0; k < integrand.size(); ++k)
    integrand[k] = std::abs(pr.psi[k]) * energy[k].real();
  integrand.validity() = base;
  double total = integrate(integrand, base).real();

  double sum = 0.0;
  for (std::size_t s = 0; s < sec.count(); ++s) {
    GridField theta = theta_field(pr.psi, sec, s);
    NodeMask m(base.size(), 0);
    for (std::size_t k = 0; k < base.size(); ++k) m[k] = base[k] && theta[k].real() >= 0.0;
    sum += integrate(integrand, m).real();
  }
  CHECK(total <= sum + 1e-9 * std::abs(total) + 1e-12);
}

TEST_CASE("potential identity: vanishing difference and degenerate omega") {
  auto g = rect_grid(1.0, 1.0, 32);
  ProblemSpec p = unit_spec("1", 1.0, "exp(i*x1)");
  auto [u1, r1] = solve_forward(p, g);
  GridField tau = cutoff_tau(g->shrink_mask(0.05), 0.2, g);
  GridField ones(g, Complex(1, 0));
  GridField zeta = build_test_function(u1, tau, ones);

  IdentityReport rep =
      potential_identity_check(u1, u1, *p.gamma, p.A, *p.rho, *p.rho, 1.0, zeta);
  CHECK(std::abs(rep.lhs) < 1e-14);
  CHECK(std::abs(rep.rhs) < 1e-14);

  CHECK_THROWS_AS(potential_identity_check(u1, u1, *p.gamma, p.A, *p.rho, *p.rho, 0.0, zeta),
                  Error);
}

TEST_CASE("potential identity: residual decays with resolution") {
  std::vector<double> hs, res;
  for (int n : {32, 64, 128}) {
    auto g = rect_grid(1.0, 1.0, n);
    ProblemSpec p1 = unit_spec("1", 1.0, "exp(i*x1)");
    ProblemSpec p2 = p1;
    p2.rho = cf("1+0.1*x1");
    auto [u1, r1] = solve_forward(p1, g);
    auto [u2, r2] = solve_forward(p2, g);
    GridField tau = cutoff_tau(g->shrink_mask(0.05), 0.2, g);
    GridField ones(g, Complex(1, 0));
    GridField zeta = build_test_function(u1, tau, ones);
    IdentityReport rep =
        potential_identity_check(u1, u2, *p1.gamma, p1.A, *p1.rho, *p2.rho, 1.0, zeta);
    hs.push_back(g->h());
    res.push_back(rep.relative_residual);
  }
  CHECK(loglog_slope(hs, res) >= 0.8);
  CHECK(res.back() < 0.05);
}

TEST_CASE("estimate report serializes the named constants") {
  Pair pr = make_pair(32, kBump);
  SectorDecomposition sec = sector_decompose(pr.psi, 0.1 * M_PI, domain_nodes(*pr.grid));
  EstimateReport rep =
      fundamental_estimate_check(pr.u1, pr.u2, pr.psi, *pr.p1.rho, pr.p1.A, 1.0, sec);
  auto j = rep.to_json();
  for (const char* key : {"C_tau", "C", "sigma", "four_C_over_sin", "lhs", "rhs", "verdict"})
    CHECK(j.contains(key));
}
