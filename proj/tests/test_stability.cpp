#include <doctest.h>

#include <cmath>
#include <random>

#include "imstab/errors.hpp"
#include "imstab/quadrature.hpp"
#include "imstab/stability.hpp"
#include "support/helpers.hpp"

using namespace imstab;
using namespace imstab::testing;

namespace {

CoefPtr cf(const std::string& expr) {
  return std::make_shared<CoefficientField>(CoefficientField::from_expr(expr));
}

ProblemSpec spec_of(const std::string& gamma, const std::string& rho, double omega2,
                    const std::string& g) {
  ProblemSpec p;
  p.gamma = cf(gamma);
  p.rho = cf(rho);
  p.omega2 = omega2;
  p.g = parse_expr(g);
  return p;
}

ExperimentConfig cosine_gamma_config(const std::string& gamma2) {
  ExperimentConfig cfg;
  cfg.id = "cosine";
  cfg.mode = Mode::gamma;
  cfg.domain = Domain::rectangle(2.0, 2.0);
  cfg.n_cells = 96;
  cfg.problem1 = spec_of("1", "1", 2.0, "cos(x1)*cos(x2)");
  cfg.problem2 = spec_of(gamma2, "1", 2.0, "cos(x1)*cos(x2)");
  return cfg;
}

}  // namespace

TEST_CASE("optimize_eta: closed form with clamping") {
  EtaOptimum symmetric = optimize_eta(1.0, 1.0, 1.0);
  CHECK(symmetric.eta_star == doctest::Approx(1.0));
  CHECK(symmetric.value == doctest::Approx(2.0));

  EtaOptimum interior = optimize_eta(2.0, 1.0, 1.0);
  CHECK(interior.eta_star == doctest::Approx(std::sqrt(0.5)));
  CHECK(interior.value == doctest::Approx(2.0 * std::sqrt(2.0)));

  EtaOptimum infimum = optimize_eta(1.0, 0.0, 1.0);
  CHECK(infimum.value == 0.0);
  CHECK(infimum.infimum_at_zero);

  CHECK_THROWS_AS(optimize_eta(-1.0, 1.0, 1.0), Error);
}

TEST_CASE("optimize_eta: matches a 10^4-point grid search") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> co(0.1, 10.0), ex(0.5, 4.0);
  for (int t = 0; t < 100; ++t) {
    double a = co(gen), b = co(gen), r = ex(gen);
    EtaOptimum opt = optimize_eta(a, b, r);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 10000; ++k) {
      double eta = double(k) / 10000.0;
      best = std::min(best, a * eta + b * std::pow(eta, -r));
    }
    REQUIRE(std::abs(opt.value - best) <= 1e-6 * std::max(1.0, best));
    REQUIRE(opt.value <= best + 1e-12);
  }
}

TEST_CASE("gn_exponents: printed formula, limit mode, and precondition") {
  GnExponents g = gn_exponents(2, 4.0);
  CHECK(g.theta == doctest::Approx(0.8));
  CHECK(g.kappa == doctest::Approx(0.2));

  GnExponents lim = gn_exponents(2, std::numeric_limits<double>::infinity());
  CHECK(lim.theta == doctest::Approx(2.0 / 3.0));
  CHECK(lim.kappa == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(gn_exponents(2, 2.0), Error);
}

TEST_CASE("gn_exponents: theta strictly decreases in s") {
  double prev = 1.0;
  for (double s : {3.0, 4.0, 6.0, 10.0}) {
    double theta = gn_exponents(2, s).theta;
    CHECK(theta < prev);
    prev = theta;
  }
}

TEST_CASE("holder_certificate: alpha = kappa/(r+1) and zero lhs passes") {
  ChainInputs in;
  in.mode = Mode::gamma;
  in.r = 2.0;
  in.C1 = 4.0;
  in.C2 = 1.0;
  in.C3 = 1.0;
  in.density_linf_v = 0.5;
  in.weighted_integral_v = 0.01;
  in.weighted_integral_omega = 0.02;
  GnExponents g = gn_exponents(2, 4.0);
  in.gn_theta = g.theta;
  in.gn_kappa = g.kappa;
  in.gn_constant = 2.0;
  in.w1s_v = 1.0;
  in.estimate_factor = 100.0;
  in.rhs_norm = 0.3;
  in.lhs_norm = 0.0;
  HolderCertificate cert = holder_certificate(in);
  CHECK(cert.alpha == doctest::Approx(0.2 / 3.0));
  CHECK(cert.verdict);
  // Chain consistency: the intermediate computed directly and through the
  // eta optimum agree when the optimum is interior.
  CHECK(cert.eta_star < 1.0);
  CHECK(cert.intermediate_direct ==
        doctest::Approx(cert.intermediate_via_eta).epsilon(1e-8));
}

TEST_CASE("split_bound: arithmetic of a eta + b eta^-r") {
  auto g = rect_grid(2.0, 2.0, 64);
  CriticalSet z;
  z.tau_z = 1e-12;
  z.mask.assign(g->node_count(), 0);
  z.mask[g->index(32, 32)] = 1;
  CriticalComponent c;
  c.kind = CriticalComponent::Kind::point;
  c.nodes = {g->index(32, 32)};
  c.centroid = g->node(32, 32);
  z.components = {c};
  StrataDecomposition strata = extract_strata(z, *g);

  TubeFit tube;
  tube.C1 = 2.0;
  tube.C2 = 1.0;
  tube.loja.C3 = 1.0;
  tube.loja.r = 1.0;

  GridField density(g, Complex(1.0, 0.0));
  GridField weight(g, Complex(0.0, 0.0));
  NodeMask v = g->shrink_mask(0.3);
  SplitBound sb = split_bound(density, weight, tube, 0.5, v, strata, 2.0);
  CHECK(sb.a == doctest::Approx(2.0));  // C1 * ||1||_inf
  CHECK(sb.b == doctest::Approx(0.0));
  CHECK(sb.value == doctest::Approx(1.0));

  GridField w1(g, Complex(1.0, 0.0));
  SplitBound sb2 = split_bound(density, w1, tube, 0.5, v, strata, 2.0);
  CHECK(sb2.value == doctest::Approx(sb2.a * 0.5 + sb2.b / 0.5));

  CHECK_THROWS_AS(split_bound(density, w1, tube, 1.5, v, strata, 2.0), Error);
}

TEST_CASE("reconstruct_rho: constant coefficients from the plane wave") {
  auto g = rect_grid(1.0, 1.0, 128);
  GridField u = sample(g, [](double x, double) { return std::polar(1.0, x); });

  auto gamma1 = CoefficientField::from_expr("1");
  Reconstruction r1 = reconstruct_rho(u, gamma1, MatrixCoefficient::identity(), 1.0, 0.1);
  double err = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < r1.field.size(); ++k)
    if (r1.mask[k]) {
      err = std::max(err, std::abs(r1.field[k] - Complex(1.0, 0.0)));
      ++count;
    }
  CHECK(err <= 1e-3);
  CHECK(count > 0);
  CHECK(r1.masked_out == 0);  // |u| = 1 everywhere

  auto gamma2 = CoefficientField::from_expr("2");
  Reconstruction r2 = reconstruct_rho(u, gamma2, MatrixCoefficient::identity(), 1.0, 0.1);
  err = 0.0;
  for (std::size_t k = 0; k < r2.field.size(); ++k)
    if (r2.mask[k]) err = std::max(err, std::abs(r2.field[k] - Complex(2.0, 0.0)));
  CHECK(err <= 2e-3);
}

TEST_CASE("reconstruct_rho: nodal curves of the cosine phantom get masked") {
  auto g = rect_grid(2.0, 2.0, 96);
  GridField u = sample(g, [](double x, double y) {
    return Complex(std::cos(x) * std::cos(y), 0.0);
  });
  auto gamma = CoefficientField::from_expr("1");
  Reconstruction rec = reconstruct_rho(u, gamma, MatrixCoefficient::identity(), 2.0, 0.1);
  CHECK(rec.masked_out > 0);
  // Near the nodal line x1 = pi/2 the mask is off; far from it, rho = 1.
  std::size_t k_nodal = g->index(int(std::lround(M_PI / 2 / g->hx())), 24);
  CHECK(rec.mask[k_nodal] == 0);
  double err = 0.0;
  for (std::size_t k = 0; k < rec.field.size(); ++k)
    if (rec.mask[k]) err = std::max(err, std::abs(rec.field[k] - Complex(1.0, 0.0)));
  CHECK(err <= 1e-2);
}

TEST_CASE("reconstruct_rho: empty result is an error") {
  auto g = rect_grid(1.0, 1.0, 16);
  GridField u(g);  // identically zero
  auto gamma = CoefficientField::from_expr("1");
  CHECK_THROWS_AS(reconstruct_rho(u, gamma, MatrixCoefficient::identity(), 1.0, 0.1), Error);
}

TEST_CASE("reconstruct rho . solve_forward = identity for random smooth rho") {
  std::mt19937 gen(21);
  std::uniform_real_distribution<double> amp(0.05, 0.3);
  for (int t = 0; t < 5; ++t) {
    double a = amp(gen), b = amp(gen), c = amp(gen);
    std::string rho_expr = "1+" + std::to_string(a) + "*sin(x1)+" + std::to_string(b) +
                           "*cos(x2)+" + std::to_string(c) + "*x1*x2";
    ProblemSpec p = spec_of("1", rho_expr, 1.0, "exp(i*x1)");
    auto g = rect_grid(1.0, 1.0, 96);
    auto [u, rep] = solve_forward(p, g);
    Reconstruction rec = reconstruct_rho(u, *p.gamma, p.A, 1.0, 0.3);
    GridField truth = evaluate(*p.rho, g);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < rec.field.size(); ++k)
      if (rec.mask[k]) {
        err = std::max(err, std::abs(rec.field[k] - truth[k]));
        scale = std::max(scale, std::abs(truth[k]));
      }
    REQUIRE(err / scale < 5e-3);  // second-order discretization leftovers
  }
}

TEST_CASE("reconstruct_gamma_march: constant coefficient from the plane wave") {
  auto g = rect_grid(1.0, 1.0, 128);
  GridField u = sample(g, [](double x, double) { return std::polar(1.0, x); });
  auto rho = CoefficientField::from_expr("1");
  auto inflow = CoefficientField::from_expr("1");
  Reconstruction rec =
      reconstruct_gamma_march(u, rho, MatrixCoefficient::identity(), 1.0, inflow, 0.1);
  double err = 0.0;
  for (std::size_t k = 0; k < rec.field.size(); ++k)
    if (rec.mask[k]) err = std::max(err, std::abs(rec.field[k] - Complex(1.0, 0.0)));
  CHECK(err <= 5.0 * g->h());
}

TEST_CASE("reconstruct_gamma_march: self-consistency for a linear gamma") {
  ProblemSpec p = spec_of("1+0.5*x1", "1", 1.0, "exp(i*x1)");
  auto g = rect_grid(1.0, 1.0, 128);
  auto [u, rep] = solve_forward(p, g);
  Reconstruction rec = reconstruct_gamma_march(u, *p.rho, p.A, 1.0, *p.gamma, 0.1);
  GridField truth = evaluate(*p.gamma, g);
  double err = 0.0, scale = 0.0;
  std::size_t valid = 0;
  for (std::size_t k = 0; k < rec.field.size(); ++k)
    if (rec.mask[k]) {
      err = std::max(err, std::abs(rec.field[k] - truth[k]));
      scale = std::max(scale, std::abs(truth[k]));
      ++valid;
    }
  CHECK(valid > rec.field.size() / 2);
  CHECK(err / scale <= 0.05);
}

TEST_CASE("reconstruct_gamma_march: flat directional derivative masks a stripe") {
  auto g = rect_grid(1.0, 1.0, 64);
  GridField u = sample(g, [](double x, double y) {
    return (y - 0.5) * std::polar(1.0, x);
  });
  auto rho = CoefficientField::from_expr("1");
  auto inflow = CoefficientField::from_expr("1");
  Reconstruction rec =
      reconstruct_gamma_march(u, rho, MatrixCoefficient::identity(), 1.0, inflow, 0.1);
  CHECK(rec.masked_out > 0);
  int mid = g->ny() / 2;
  bool stripe_masked = true;
  for (int i = 2; i < g->nx() - 1; ++i)
    stripe_masked = stripe_masked && rec.mask[g->index(i, mid)] == 0;
  CHECK(stripe_masked);
  // Rows away from the stripe keep valid values.
  std::size_t top_valid = 0;
  for (int i = 1; i < g->nx(); ++i) top_valid += rec.mask[g->index(i, g->ny() - 8)];
  CHECK(top_valid > std::size_t(g->nx() / 2));
}

TEST_CASE("run_experiment: identical pair gives a zero-lhs pass") {
  ExperimentConfig cfg;
  cfg.id = "identical";
  cfg.mode = Mode::gamma;
  cfg.domain = Domain::rectangle(1.0, 1.0);
  cfg.n_cells = 48;
  cfg.problem1 = spec_of("1", "1", 1.0, "exp(i*x1)");
  cfg.problem2 = cfg.problem1;
  StabilityReport rep = run_experiment(cfg);
  CHECK(rep.chain.lhs == 0.0);
  CHECK(rep.chain.verdict);
  CHECK(rep.estimate.verdict);
  CHECK(rep.noncritical);  // plane wave has no critical points
}

TEST_CASE("run_experiment: cosine phantom goes through the tube machinery") {
  ExperimentConfig cfg = cosine_gamma_config("1+0.1*x1*(2-x1)*x2*(2-x2)");
  StabilityReport rep = run_experiment(cfg);
  CHECK_FALSE(rep.noncritical);
  CHECK(rep.tube.cover_ok);
  CHECK(rep.tube.loja.r > 1.5);
  CHECK(rep.estimate.verdict);
  CHECK(rep.chain.verdict);
  CHECK(rep.chain.alpha > 0.0);
  CHECK(rep.chain.alpha < 1.0);
  CHECK(rep.identity.relative_residual < 0.1);
}

TEST_CASE("run_experiment: rho mode uses W11 and no boundary term") {
  ExperimentConfig cfg;
  cfg.id = "rho-smoke";
  cfg.mode = Mode::rho;
  cfg.domain = Domain::rectangle(1.0, 1.0);
  cfg.n_cells = 64;
  cfg.problem1 = spec_of("1", "1", 1.0, "exp(i*x1)");
  cfg.problem2 = spec_of("1", "1+0.1*x1*(1-x1)*x2*(1-x2)", 1.0, "exp(i*x1)");
  StabilityReport rep = run_experiment(cfg);
  CHECK(rep.noncritical);  // |u1| = 1 has no zeros
  CHECK(rep.rho_estimate_verdict);
  CHECK(rep.chain.verdict);
  CHECK(rep.chain.rhs == doctest::Approx(rep.diff_w11));
  auto j = rep.to_json();
  CHECK(j.contains("rho_estimate"));
  CHECK_FALSE(j.contains("estimate"));
}

TEST_CASE("run_family: single constant calibrated at the top amplitude") {
  ExperimentConfig cfg = cosine_gamma_config("1+0.1*x1*(2-x1)*x2*(2-x2)");
  cfg.n_cells = 64;
  cfg.family_amplitudes = {0.01, 0.1, 1.0};
  auto reports = run_family(cfg, 2);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) CHECK(r.calibrated_verdict);
  // lhs grows monotonically with rhs across the family.
  CHECK(reports[0].chain.lhs < reports[1].chain.lhs);
  CHECK(reports[1].chain.lhs < reports[2].chain.lhs);
  CHECK(reports[0].chain.rhs < reports[1].chain.rhs);
  CHECK(reports[0].C_calibrated == reports[2].C_calibrated);
}

TEST_CASE("reports are byte-deterministic") {
  ExperimentConfig cfg = cosine_gamma_config("1+0.05*x1*(2-x1)*x2*(2-x2)");
  cfg.n_cells = 48;
  StabilityReport a = run_experiment(cfg);
  StabilityReport b = run_experiment(cfg);
  CHECK(a.to_json().dump(2) == b.to_json().dump(2));
  CHECK(a.csv_row() == b.csv_row());
}
