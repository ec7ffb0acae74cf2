#include <doctest.h>

#include <cmath>
#include <random>

#include "imstab/coefficient.hpp"
#include "imstab/distance.hpp"
#include "imstab/errors.hpp"
#include "imstab/problem.hpp"
#include "imstab/sectors.hpp"
#include "support/helpers.hpp"

using namespace imstab;
using namespace imstab::testing;

namespace {

CoefficientField two_piece_field(const std::string& left, const std::string& right,
                                 double split, Continuity cont) {
  Piece a, b;
  a.expr_text = left;
  a.region = {Region::Type::halfplane, 1.0, 0.0, split};
  b.expr_text = right;
  b.region.type = Region::Type::all;
  return CoefficientField({a, b}, cont);
}

SectorDecomposition quarter_sectors() {
  SectorDecomposition s;
  s.angles = {-M_PI / 4, M_PI / 4, 3 * M_PI / 4, 5 * M_PI / 4};
  s.sigma = 0.1 * M_PI;
  s.admissible = true;
  return s;
}

}  // namespace

TEST_CASE("evaluate: constant complex field") {
  auto g = rect_grid(1.0, 1.0, 16);
  auto f = CoefficientField::from_expr("1+2*i");
  GridField v = evaluate(f, g);
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(v[k].real() == doctest::Approx(1.0));
    CHECK(v[k].imag() == doctest::Approx(2.0));
  }
}

TEST_CASE("evaluate: matching pieces reproduce the single expression") {
  auto g = rect_grid(1.0, 1.0, 32);
  CoefficientField split = two_piece_field("1+x1^2", "1+x1^2", 0.5, Continuity::C1);
  GridField v = evaluate(split, g);
  GridField ref = sample(g, [](double x1, double) { return Complex(1.0 + x1 * x1, 0.0); });
  for (std::size_t k = 0; k < v.size(); ++k)
    CHECK(std::abs(v[k] - ref[k]) < 1e-14);
  CHECK(split.continuity_mismatch(g->domain()) < 1e-8);
}

TEST_CASE("evaluate: C2 seam passes continuity but trips the jump scan") {
  auto g = rect_grid(1.0, 1.0, 128);
  // Left piece constant 1; right piece adds x1^2 (x1 - 1/2)^3: C2 across the
  // seam, third normal derivative jumps by 6 * (1/2)^2 = 1.5.
  CoefficientField seam = two_piece_field("1", "1+x1^2*(x1-0.5)^3", 0.5, Continuity::C1);
  CHECK(seam.continuity_mismatch(g->domain()) < 1e-8);
  double jump = interface_jump_scan(seam, *g);
  CHECK(jump > 0.5);

  CoefficientField smooth = two_piece_field("1+x1^2*(x1-0.5)^3", "1+x1^2*(x1-0.5)^3", 0.5,
                                            Continuity::analytic);
  CHECK(interface_jump_scan(smooth, *g) < 0.2);
}

TEST_CASE("evaluate: uncovered node is a coverage error") {
  auto g = rect_grid(1.0, 1.0, 8);
  Piece p;
  p.expr_text = "1";
  p.region = {Region::Type::halfplane, 1.0, 0.0, 0.5};  // covers only x1 <= 0.5
  CoefficientField partial({p}, Continuity::analytic);
  CHECK_THROWS_AS(evaluate(partial, g), Error);
}

TEST_CASE("psi_field: subtraction against a nodewise oracle") {
  auto g = rect_grid(1.0, 1.0, 32);
  auto g1 = CoefficientField::from_expr("1");
  auto g2 = CoefficientField::from_expr("1+(1+0.5*i)*x1");
  GridField psi = psi_field(g1, g2, g);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    Point p = g->node(k);
    CHECK(std::abs(psi[k] - Complex(p.x, 0.5 * p.x)) < 1e-14);
  }

  GridField zero = psi_field(g2, g2, g);
  CHECK(zero.max_abs() == 0.0);

  auto a = CoefficientField::from_expr("0.3*x1^2-x2+2*i*x1*x2");
  auto b = CoefficientField::from_expr("x1*x2+(1-i)*x2^2");
  GridField d = psi_field(a, b, g);
  for (std::size_t k = 0; k < d.size(); ++k) {
    Point p = g->node(k);
    CHECK(std::abs(d[k] - (b.eval(p) - a.eval(p))) < 1e-14);
  }
}

TEST_CASE("sufficient condition: tan(kappa) envelope") {
  auto g = rect_grid(1.0, 1.0, 32);
  NodeMask all = all_nodes(*g);
  double sigma = 0.1 * M_PI;

  GridField psi = sample(g, [](double x1, double) { return Complex(x1, 0.5 * x1); });
  CHECK(sufficient_condition_check(psi, std::atan(0.5) + 0.01, sigma, all));
  CHECK_FALSE(sufficient_condition_check(psi, std::atan(0.5) - 0.05, sigma, all));

  GridField re = sample(g, [](double x1, double x2) { return Complex(x1 - x2, 0.0); });
  CHECK(sufficient_condition_check(re, 0.0, sigma, all));

  GridField im = sample(g, [](double x1, double) { return Complex(0.0, x1); });
  for (double kappa : {0.0, 0.3, 1.0, 1.39})
    CHECK_FALSE(sufficient_condition_check(im, kappa, sigma, all));

  CHECK_THROWS_AS(sufficient_condition_check(psi, 0.5 * (M_PI - sigma) + 0.01, sigma, all),
                  Error);
}

TEST_CASE("sector_decompose: real nonzero pair is admissible") {
  auto g = rect_grid(1.0, 1.0, 64);
  GridField psi = sample(g, [](double x1, double x2) {
    return Complex(0.1 * x1 * (1 - x1) * x2 * (1 - x2), 0.0);
  });
  SectorDecomposition s = sector_decompose(psi, 0.1 * M_PI, all_nodes(*g));
  CHECK(s.admissible);
  CHECK(s.count() >= 3);
  CHECK(s.count() <= 4);
  for (std::size_t k = 0; k < s.count(); ++k) CHECK(s.gap(k) <= M_PI - s.sigma + 1e-12);
}

TEST_CASE("sector_decompose: winding phase is not admissible") {
  auto g = build_grid(Domain::rectangle(2.0 * M_PI, 1.0), 128);
  GridField psi = sample(g, [](double x1, double) { return std::polar(1.0, x1); });
  SectorDecomposition s = sector_decompose(psi, 0.1 * M_PI, all_nodes(*g));
  CHECK_FALSE(s.admissible);
  CHECK(s.witness_measure > s.tau_H);
  // The witness angle's ray {x1 = witness mod 2pi} has length ~ 1.
  CHECK(s.witness_measure > 0.5);
}

TEST_CASE("sector_decompose: vanishing difference is vacuously admissible") {
  auto g = rect_grid(1.0, 1.0, 32);
  GridField psi(g);
  SectorDecomposition s = sector_decompose(psi, 0.1 * M_PI, all_nodes(*g));
  CHECK(s.admissible);
  CHECK(s.vacuous);
}

TEST_CASE("reduce_angles: worked examples") {
  double sigma = 0.1 * M_PI;
  std::vector<double> five;
  for (int k = 0; k < 5; ++k) five.push_back(2.0 * M_PI * k / 5);
  auto r5 = reduce_angles(five, sigma);
  CHECK(r5.size() == 4);

  std::vector<double> three = {0.1, 2.0, 4.0};
  CHECK(reduce_angles(three, sigma) == three);

  std::vector<double> eight;
  for (int k = 0; k < 8; ++k) eight.push_back(2.0 * M_PI * k / 8);
  auto r8 = reduce_angles(eight, sigma);
  CHECK(r8.size() == 4);
  for (std::size_t k = 0; k < r8.size(); ++k) {
    double hi = k + 1 < r8.size() ? r8[k + 1] : r8[0] + 2 * M_PI;
    CHECK(hi - r8[k] <= M_PI - sigma + 1e-12);
  }
}

TEST_CASE("reduce_angles: gap bound preserved over 1000 random inputs") {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> count(3, 12);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
  double sigma = 0.1 * M_PI;
  int accepted = 0;
  while (accepted < 1000) {
    int n = count(gen);
    std::vector<double> angles(n);
    for (double& a : angles) a = uni(gen);
    std::sort(angles.begin(), angles.end());
    bool ok = true;
    for (int k = 0; k < n; ++k) {
      double hi = k + 1 < n ? angles[k + 1] : angles[0] + 2 * M_PI;
      if (hi - angles[k] > M_PI - sigma) ok = false;
    }
    if (!ok) continue;
    ++accepted;
    auto out = reduce_angles(angles, sigma);
    REQUIRE(out.size() <= 4);
    REQUIRE(out.size() >= 3);
    for (std::size_t k = 0; k < out.size(); ++k) {
      double hi = k + 1 < out.size() ? out[k + 1] : out[0] + 2 * M_PI;
      REQUIRE(hi - out[k] <= M_PI - sigma + 1e-12);
    }
  }
}

TEST_CASE("reduce_angles: rejects gap-bound violations") {
  CHECK_THROWS_AS(reduce_angles({0.0, 0.1, 0.2}, 0.1 * M_PI), Error);
}

TEST_CASE("theta_field: sign trichotomy on the quarter sector") {
  auto g = rect_grid(1.0, 1.0, 4);
  SectorDecomposition s = quarter_sectors();

  GridField one(g, Complex(1.0, 0.0));
  CHECK(theta_field(one, s, 0)[0].real() == doctest::Approx(1.0));

  GridField ii(g, Complex(0.0, 1.0));
  CHECK(theta_field(ii, s, 0)[0].real() == doctest::Approx(-1.0));

  GridField ray(g, std::polar(1.0, M_PI / 4));
  CHECK(std::abs(theta_field(ray, s, 0)[0].real()) < 1e-14);

  // Cross-check the trichotomy against a direct argument test.
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> arg(-M_PI, M_PI);
  for (int t = 0; t < 200; ++t) {
    Complex z = std::polar(1.0, arg(gen));
    GridField f(g, z);
    double theta = theta_field(f, s, 0)[0].real();
    bool inside = std::abs(std::arg(z)) < M_PI / 4 - 1e-9;
    bool outside = std::abs(std::arg(z)) > M_PI / 4 + 1e-9;
    if (inside) CHECK(theta > 0.0);
    if (outside) CHECK(theta < 0.0);
  }
}

TEST_CASE("theta_clamped: clamp values and band mask") {
  auto g = rect_grid(1.0, 1.0, 2);
  GridField theta(g, Complex(0.5, 0.0));
  CHECK(theta_clamped(theta, 1.0).value[0].real() == doctest::Approx(0.5));

  GridField neg(g, Complex(-3.0, 0.0));
  auto cn = theta_clamped(neg, 1.0);
  CHECK(cn.value[0].real() == 0.0);
  CHECK(cn.band[0] == 0);

  GridField big(g, Complex(7.0, 0.0));
  auto cb = theta_clamped(big, 2.0);
  CHECK(cb.value[0].real() == doctest::Approx(1.0));
  CHECK(cb.band[0] == 0);

  CHECK_THROWS_AS(theta_clamped(theta, 0.0), Error);
}

TEST_CASE("theta_clamped: monotone pointwise limit toward the indicator") {
  auto g = rect_grid(1.0, 1.0, 48);
  SectorDecomposition s = quarter_sectors();
  GridField psi = sample(g, [](double x1, double x2) {
    return Complex(x1 - 0.5, 0.3 * (x2 - 0.5));
  });
  GridField theta = theta_field(psi, s, 0);
  auto c1 = theta_clamped(theta, 0.2), c2 = theta_clamped(theta, 0.1),
       c3 = theta_clamped(theta, 0.05);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double t = theta[k].real();
    if (t == 0.0) continue;
    CHECK(c2.value[k].real() >= c1.value[k].real() - 1e-14);
    CHECK(c3.value[k].real() >= c2.value[k].real() - 1e-14);
    if (t > 0.0) CHECK(c3.value[k].real() <= 1.0);
    if (t < 0.0) CHECK(c3.value[k].real() == 0.0);
    if (t >= 0.05) CHECK(c3.value[k].real() == doctest::Approx(1.0));
  }
}

TEST_CASE("cutoff_tau: plateau, support, and slope bound") {
  auto g = rect_grid(1.0, 1.0, 256);
  NodeMask region = g->shrink_mask(0.2);
  double h_band = 0.1;
  GridField tau = cutoff_tau(region, h_band, g);
  GridField dist = distance_field([&] {
    NodeMask c(region.size(), 0);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = region[k] ? 0 : 1;
    return c;
  }(), g);
  for (std::size_t k = 0; k < tau.size(); ++k) {
    double d = dist[k].real();
    if (d >= 1.5 * h_band) CHECK(tau[k].real() == doctest::Approx(1.0));
    if (d <= 0.25 * h_band) CHECK(tau[k].real() == 0.0);
  }
  GridField tx = diff_x(tau), ty = diff_y(tau);
  double worst = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k)
    if (tx.valid(k) && ty.valid(k))
      worst = std::max(worst, std::hypot(tx[k].real(), ty[k].real()));
  CHECK(worst <= 3.2 / h_band);

  CHECK_THROWS_AS(cutoff_tau(region, 1.5 * g->h(), g), Error);
}

TEST_CASE("sector cover and beta_k bound across random complex fields") {
  auto g = rect_grid(1.0, 1.0, 48);
  GridField psi = sample(g, [](double x1, double x2) {
    return Complex(std::sin(3 * x1) + 0.2, 0.4 * std::cos(2 * x2));
  });
  SectorDecomposition s = sector_decompose(psi, 0.1 * M_PI, all_nodes(*g));
  REQUIRE(s.admissible);

  std::vector<GridField> thetas;
  for (std::size_t k = 0; k < s.count(); ++k) thetas.push_back(theta_field(psi, s, k));

  double sin_half_sigma = std::sin(0.5 * s.sigma);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    if (std::abs(psi[n]) <= s.tau_0) continue;
    int nonneg = 0, strictly_pos = 0;
    for (std::size_t k = 0; k < s.count(); ++k) {
      double t = thetas[k][n].real();
      if (t >= 0.0) ++nonneg;
      if (t > 1e-12) ++strictly_pos;
      if (t >= 0.0) {
        double lhs = std::abs(psi[n]);
        double rhs = (s.beta(k) * psi[n]).real() / sin_half_sigma;
        REQUIRE(lhs <= rhs + 1e-10);
      }
    }
    REQUIRE(nonneg >= 1);        // sectors cover C \ {0}
    REQUIRE(strictly_pos <= 1);  // interiors are disjoint
  }
}

TEST_CASE("sufficient condition implies sector admissibility") {
  auto g = rect_grid(1.0, 1.0, 64);
  double sigma = 0.1 * M_PI;
  GridField psi = sample(g, [](double x1, double x2) {
    double re = 0.2 + x1 * x2;
    return Complex(re, 0.4 * re);
  });
  REQUIRE(sufficient_condition_check(psi, std::atan(0.4) + 0.01, sigma, all_nodes(*g)));
  CHECK(sector_decompose(psi, sigma, all_nodes(*g)).admissible);
}

TEST_CASE("CoefficientField JSON round trip") {
  Piece a, b;
  a.expr_text = "1+0.5*x1";
  a.region = {Region::Type::halfplane, 1.0, 0.0, 0.5};
  b.expr_text = "exp(i*x2)";
  b.region.type = Region::Type::disk;
  b.region.cx = 0.5;
  b.region.cy = 0.5;
  b.region.r = 2.0;
  CoefficientField f({a, b}, Continuity::C0);
  CoefficientField g = CoefficientField::from_json(f.to_json());
  CHECK(g.pieces().size() == 2);
  CHECK(g.continuity() == Continuity::C0);
  for (double x : {0.1, 0.4, 0.7})
    for (double y : {0.2, 0.9}) {
      Point p{x, y};
      CHECK(std::abs(f.eval(p) - g.eval(p)) < 1e-15);
    }
}

TEST_CASE("expression grammar: operators, functions, errors") {
  auto e = parse_expr("re(exp(i*x1))+im((2-i)*x2)^2/4");
  // re(e^{ix}) = cos x; im((2-i)y) = -y
  CHECK(e->eval(0.7, 0.8).real() ==
        doctest::Approx(std::cos(0.7) + (0.8 * 0.8) / 4.0));
  CHECK(parse_expr("2^3^2")->eval(0, 0).real() == doctest::Approx(512.0));  // right assoc
  CHECK(parse_expr("-x1^2")->eval(3, 0).real() == doctest::Approx(-9.0));
  CHECK(parse_expr("1e-2+1E3")->eval(0, 0).real() == doctest::Approx(1000.01));
  CHECK_THROWS_AS(parse_expr("sin x1"), Error);
  CHECK_THROWS_AS(parse_expr("x3"), Error);
  CHECK_THROWS_AS(parse_expr("(1+2"), Error);
  CHECK_THROWS_AS(parse_expr("1+*2"), Error);
}

TEST_CASE("ProblemSpec validation catches hypothesis violations") {
  auto g = rect_grid(1.0, 1.0, 16);
  ProblemSpec p;
  p.gamma = std::make_shared<CoefficientField>(CoefficientField::from_expr("1"));
  p.rho = std::make_shared<CoefficientField>(CoefficientField::from_expr("1"));
  p.g = parse_expr("1");
  CHECK_NOTHROW(p.validate(*g));

  ProblemSpec bad = p;
  bad.gamma = std::make_shared<CoefficientField>(CoefficientField::from_expr("x1-2"));
  CHECK_THROWS_AS(bad.validate(*g), Error);  // Re gamma <= 0

  ProblemSpec badim = p;
  badim.gamma = std::make_shared<CoefficientField>(CoefficientField::from_expr("1-i"));
  CHECK_THROWS_AS(badim.validate(*g), Error);  // Im gamma < 0

  ProblemSpec badrho = p;
  badrho.gamma = std::make_shared<CoefficientField>(CoefficientField::from_expr("1+i"));
  badrho.rho = std::make_shared<CoefficientField>(CoefficientField::from_expr("1+0.5*i"));
  CHECK_THROWS_AS(badrho.validate(*g), Error);  // Im rho > 0 with complex gamma

  ProblemSpec bada = p;
  bada.A.a11 = std::make_shared<CoefficientField>(CoefficientField::from_expr("-1"));
  CHECK_THROWS_AS(bada.validate(*g), Error);  // not positive definite

  ProblemSpec steep = p;
  steep.gamma = std::make_shared<CoefficientField>(CoefficientField::from_expr("1+10*x1"));
  CHECK_THROWS_AS(steep.validate(*g), Error);  // W1inf beyond 1/sigma
}

TEST_CASE("ProblemSpec: gamma and rho singularities must coincide") {
  auto g = rect_grid(1.0, 1.0, 16);
  ProblemSpec p;
  p.g = parse_expr("1");
  p.gamma = std::make_shared<CoefficientField>(
      two_piece_field("1+0.1*x1", "1.05+0.2*(x1-0.5)", 0.5, Continuity::C0));
  // Matching interface: fine.
  p.rho = std::make_shared<CoefficientField>(
      two_piece_field("1+0.2*x1", "1.1+0.1*(x1-0.5)", 0.5, Continuity::C0));
  CHECK_NOTHROW(p.validate(*g));
  // Interface at a different location: Assumption-3 violation.
  p.rho = std::make_shared<CoefficientField>(
      two_piece_field("1+0.2*x1", "1.05+0.1*(x1-0.25)", 0.25, Continuity::C0));
  CHECK_THROWS_AS(p.validate(*g), Error);
  // Analytic rho against piecewise gamma is tolerated (no singularities).
  p.rho = std::make_shared<CoefficientField>(CoefficientField::from_expr("1"));
  CHECK_NOTHROW(p.validate(*g));
  // A declared-continuous seam that actually jumps is rejected.
  ProblemSpec broken = p;
  broken.gamma =
      std::make_shared<CoefficientField>(two_piece_field("1", "1.1", 0.5, Continuity::C0));
  CHECK_THROWS_AS(broken.validate(*g), Error);
}
