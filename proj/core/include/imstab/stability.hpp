#pragma once

#include <nlohmann/json.hpp>

#include "imstab/critical.hpp"
#include "imstab/identity.hpp"
#include "imstab/solver.hpp"

namespace imstab {

enum class Mode { gamma, rho };

struct ExperimentConfig {
  std::string id = "experiment";
  Mode mode = Mode::gamma;
  Domain domain = Domain::rectangle(1.0, 1.0);
  int n_cells = 128;
  ProblemSpec problem1;
  ProblemSpec problem2;
  double sigma = 0.1 * M_PI;
  double h_band = 0.1;
  std::vector<double> etas = {0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  // Region margins as fractions of the domain diameter; R is the slab box
  // half-extent (0 = max domain extent).
  double margin_w = 0.05, margin_v = 0.1, margin_d = 0.15, margin_u = 0.02;
  double tau_z_factor = 10.0;
  double R = 0.0;
  double s = 4.0;  // Gagliardo-Nirenberg integrability exponent
  double fit_fraction = 1.0 / 3.0;
  std::vector<double> family_amplitudes;  // empty -> single run at t = 1
  double u_floor = 0.1;
  double grad_floor = 0.1;
  int march_direction = +1;
  double rho_tol = 1e-3;
  double gamma_tol = 0.05;
  double identity_tol = 0.05;
  unsigned gn_seed = 2024;
  nlohmann::json echo;  // effective config as parsed
};

// a*eta + b*eta^{-r} minimized over (0,1]; closed form with clamping.
struct EtaOptimum {
  double eta_star = 0.0;  // 0 is the b=0 infimum sentinel
  double value = 0.0;
  bool infimum_at_zero = false;
};
EtaOptimum optimize_eta(double a, double b, double r);

struct GnExponents {
  double theta = 0.0;
  double kappa = 0.0;
};
// theta = n/(n+1-n/s), kappa = 1-theta; s > n required (s may be +inf).
GnExponents gn_exponents(int n, double s);

// Smallest constant making the Gagliardo-Nirenberg inequality hold over a
// fixed 20-field family on the masked region (deterministic given the seed).
double fit_gn_constant(std::shared_ptr<const Grid> grid, const NodeMask& v_mask, double s,
                       unsigned seed);

struct SplitBound {
  double a = 0.0;  // C1 ||psi||_inf(V)
  double b = 0.0;  // (C2^r C3)^{-1} int_V |psi| f
  double r = 0.0;
  double value = 0.0;        // a*eta + b*eta^{-r}
  double lhs_integral = 0.0; // int_V |psi|
  double tolerance = 0.0;    // area of cells straddling dU(eta) times ||psi||
  bool holds = false;
};
SplitBound split_bound(const GridField& density, const GridField& weight, const TubeFit& tube,
                       double eta, const NodeMask& v_mask, const StrataDecomposition& strata,
                       double R);

struct ChainInputs {
  Mode mode = Mode::gamma;
  bool noncritical = false;
  double r = 0.0;            // Lojasiewicz exponent (critical path)
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  double min_weight = 0.0;   // min_V f (noncritical path)
  double density_linf_v = 0.0;       // ||psi||_inf(V) (or ||phi|| for rho)
  double weighted_integral_v = 0.0;  // int_V density * weight
  double weighted_integral_omega = 0.0;
  double gn_theta = 0.0, gn_kappa = 0.0, gn_constant = 0.0;
  double w1s_v = 0.0;        // ||psi||_W1s(V)
  double area_v = 0.0;       // |V| (rho mode Cauchy-Schwarz)
  double estimate_factor = 0.0;  // 4C/sin(sigma/2) (gamma) or C_rho/omega^2 (rho)
  double rhs_norm = 0.0;     // boundary + W21 (gamma) or W11 (rho)
  double lhs_norm = 0.0;     // ||psi||_inf(Omega_d)
};

struct HolderCertificate {
  double alpha = 0.0;
  double C_final = 0.0;
  double C_psi = 0.0;
  double C_l2_effective = 0.0;
  double gn_theta = 0.0, gn_kappa = 0.0, gn_constant = 0.0;
  double eta_star = 0.0;
  double split_min = 0.0;
  double intermediate_direct = 0.0;    // (int_V density*weight)^{kappa/(r+1)}
  double intermediate_via_eta = 0.0;   // same through the eta optimum
  bool noncritical = false;
  double lhs = 0.0, rhs = 0.0;
  bool verdict = false;
};
HolderCertificate holder_certificate(const ChainInputs& in);

// rho = -div(gamma A grad u) / (omega^2 u) where |u| stays above the floor.
struct Reconstruction {
  GridField field;
  NodeMask mask;
  std::size_t masked_out = 0;
};
Reconstruction reconstruct_rho(const GridField& u, const Coefficient& gamma,
                               const MatrixCoefficient& A, double omega2, double u_floor);

// Upwind integration of (A grad u) . grad gamma + gamma div(A grad u)
// = -omega^2 rho u along the x1 grid lines from the inflow edge.
// direction +1 marches left to right, -1 right to left.
Reconstruction reconstruct_gamma_march(const GridField& u, const Coefficient& rho,
                                       const MatrixCoefficient& A, double omega2,
                                       const Coefficient& gamma_inflow, double grad_floor,
                                       int direction = +1);

struct StabilityReport {
  std::string id;
  Mode mode = Mode::gamma;
  double amplitude = 1.0;
  double psi_linf_omega_d = 0.0;
  double psi_linf_boundary = 0.0;
  double diff_w21 = 0.0;
  double diff_w11 = 0.0;
  SolveReport solve1, solve2;
  IdentityReport identity;
  EstimateReport estimate;  // gamma mode only (zeroed otherwise)
  double rho_estimate_lhs = 0.0;     // omega^2 int tau |u1 psi|^2 (rho mode)
  double rho_estimate_factor = 0.0;  // C_rho
  bool rho_estimate_verdict = true;
  TubeFit tube;
  bool noncritical = false;
  HolderCertificate chain;
  std::vector<double> sector_angles;
  double sigma = 0.0;
  bool calibrated_verdict = true;  // family calibration (largest amplitude)
  double C_calibrated = 0.0;
  nlohmann::json config_echo;
  nlohmann::json to_json() const;   // timing lives under "timing"
  std::string csv_row() const;      // id, lhs, rhs, alpha, C_final, verdict
};

// Optional artifact sink: receives named grid fields (u1, u2, psi) so the
// caller can persist them without a second solve.
using FieldSink = std::function<void(const std::string&, const GridField&)>;

StabilityReport run_experiment(const ExperimentConfig& cfg, double amplitude = 1.0,
                               const FieldSink* sink = nullptr);

// Runs the amplitude family (or a single unit run), then re-checks every
// member against the single constant calibrated at the largest amplitude.
// The sink, when given, sees the largest-amplitude member's fields.
std::vector<StabilityReport> run_family(const ExperimentConfig& cfg, int workers = 0,
                                        const FieldSink* sink = nullptr);

}  // namespace imstab
