// imstab command line: forward solves, admissibility checks, identity and
// estimate verification, critical-set geometry, stability certificates, and
// coefficient reconstruction. All artifacts land in the --out directory.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "imstab/config.hpp"
#include "imstab/critical.hpp"
#include "imstab/errors.hpp"
#include "imstab/quadrature.hpp"
#include "imstab/report_io.hpp"
#include "imstab/sectors.hpp"
#include "imstab/stability.hpp"

namespace {

using namespace imstab;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerdict = 2;

struct CliArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  int workers = 0;
};

int run_solve(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, false);
  auto grid = build_grid(cfg.domain, cfg.n_cells);
  auto [u, rep] = solve_forward(cfg.problem1, grid);
  dump_csv_file(u, args.out_dir + "/u.csv");
  nlohmann::json j{{"id", cfg.id},
                   {"solver_id", rep.solver_id},
                   {"iterations", rep.iterations},
                   {"relative_residual", rep.relative_residual},
                   {"condition_estimate", rep.condition_estimate},
                   {"pde_residual_l1", pde_residual(u, cfg.problem1, grid)},
                   {"config", cfg.echo}};
  write_json_file(j, args.out_dir + "/solve.json");
  std::cerr << "solve: " << rep.solver_id << " wall " << rep.wall_time_s << " s\n";
  return kExitOk;
}

int run_check_admissible(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, true);
  auto grid = build_grid(cfg.domain, cfg.n_cells);
  GridField psi = cfg.mode == Mode::gamma
                      ? psi_field(*cfg.problem1.gamma, *cfg.problem2.gamma, grid)
                      : psi_field(*cfg.problem1.rho, *cfg.problem2.rho, grid);
  NodeMask mask(grid->node_count(), 0);
  for (std::size_t k = 0; k < mask.size(); ++k)
    mask[k] = grid->kind(k) != NodeKind::exterior;
  SectorDecomposition sec = sector_decompose(psi, cfg.sigma, mask);
  nlohmann::json j{{"id", cfg.id},
                   {"admissible", sec.admissible},
                   {"vacuous", sec.vacuous},
                   {"angles", sec.angles},
                   {"sigma", sec.sigma},
                   {"tau_0", sec.tau_0},
                   {"tau_H", sec.tau_H},
                   {"config", cfg.echo}};
  if (!sec.admissible) {
    j["witness_angle"] = sec.witness_angle;
    j["witness_measure"] = sec.witness_measure;
  }
  write_json_file(j, args.out_dir + "/admissible.json");
  return sec.admissible ? kExitOk : kExitVerdict;
}

int run_verify_identity(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, true);
  auto grid = build_grid(cfg.domain, cfg.n_cells);
  ProblemSpec p1 = cfg.problem1, p2 = cfg.problem2;
  if (cfg.mode == Mode::gamma) {
    p2.rho = p1.rho;
    p2.A = p1.A;
    p2.omega2 = p1.omega2;
  } else {
    p2.gamma = p1.gamma;
    p2.A = p1.A;
    p2.omega2 = p1.omega2;
  }
  auto [u1, rep1] = solve_forward(p1, grid);
  auto [u2, rep2] = solve_forward(p2, grid);
  NodeMask u_region = grid->shrink_mask(cfg.margin_u * cfg.domain.diameter());
  GridField tau = cutoff_tau(u_region, cfg.h_band, grid);
  IdentityReport rep;
  if (cfg.mode == Mode::gamma) {
    GridField psi = psi_field(*p1.gamma, *p2.gamma, grid);
    GridField ones(grid, Complex(1.0, 0.0));
    GridField zeta = build_test_function(u1, tau, ones);
    rep = key_identity_check(u1, u2, *p2.gamma, *p1.rho, p1.A, p1.omega2, psi, zeta);
  } else {
    GridField psi = psi_field(*p1.rho, *p2.rho, grid);
    GridField zeta(grid);
    for (std::size_t k = 0; k < zeta.size(); ++k)
      zeta[k] = tau[k] * std::conj(u1[k] * psi[k]);
    rep = potential_identity_check(u1, u2, *p1.gamma, p1.A, *p1.rho, *p2.rho, p1.omega2, zeta);
  }
  rep.h_band = cfg.h_band;
  nlohmann::json j{{"id", cfg.id}, {"identity", rep.to_json()}, {"config", cfg.echo}};
  bool pass = rep.relative_residual <= cfg.identity_tol;
  j["verdict"] = pass;
  write_json_file(j, args.out_dir + "/identity.json");
  return pass ? kExitOk : kExitVerdict;
}

int run_geometry(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, false);
  auto grid = build_grid(cfg.domain, cfg.n_cells);
  auto [u1, rep1] = solve_forward(cfg.problem1, grid);
  double diam = cfg.domain.diameter();
  NodeMask w_mask = grid->shrink_mask(cfg.margin_w * diam);
  NodeMask v_mask = grid->shrink_mask(cfg.margin_v * diam);

  double tau_z = default_critical_threshold(u1, w_mask) * cfg.tau_z_factor / 10.0;
  CriticalSet z = cfg.mode == Mode::gamma
                      ? detect_critical_set(u1, w_mask, std::max(tau_z, 1e-300))
                      : detect_small_values(u1, w_mask,
                                            std::max(cfg.tau_z_factor * grid->h() *
                                                         norm_linf(gradient_magnitude(u1), w_mask),
                                                     1e-300));

  nlohmann::json j{{"id", cfg.id}, {"tau_z", z.tau_z}, {"config", cfg.echo}};
  bool pass = true;
  if (z.empty()) {
    j["noncritical"] = true;
  } else {
    j["noncritical"] = false;
    j["components"] = z.components.size();
    StrataDecomposition strata = extract_strata(z, *grid);
    double R = cfg.R > 0.0 ? cfg.R : std::max(cfg.domain.x_extent(), cfg.domain.y_extent());
    TubeFit tube = fit_tube_constants(strata, z, *grid, cfg.etas, R);
    GridField weight = cfg.mode == Mode::gamma
                           ? energy_density(u1, cfg.problem1.A).real_part()
                           : [&] {
                               GridField w(grid);
                               for (std::size_t k = 0; k < w.size(); ++k)
                                 w[k] = Complex(std::norm(u1[k]), 0.0);
                               return w;
                             }();
    tube.loja = fit_lojasiewicz(weight, z, v_mask, cfg.fit_fraction);
    j["tube"] = tube.to_json();
    std::ostringstream csv;
    tube.dump_csv(csv);
    std::ofstream(args.out_dir + "/tube.csv") << csv.str();
    pass = tube.cover_ok && tube.loja.certificate_fraction >= 0.999;
  }
  j["verdict"] = pass;
  write_json_file(j, args.out_dir + "/geometry.json");
  return pass ? kExitOk : kExitVerdict;
}

int run_stability(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, true);
  FieldSink sink = [&](const std::string& name, const GridField& f) {
    dump_csv_file(f, args.out_dir + "/" + name + ".csv");
  };
  std::vector<StabilityReport> reports = run_family(cfg, args.workers, &sink);
  bool all_pass = true;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const StabilityReport& r = reports[k];
    bool pass = r.chain.verdict && r.calibrated_verdict &&
                r.identity.relative_residual <= cfg.identity_tol;
    if (r.mode == Mode::gamma)
      pass = pass && r.estimate.verdict;
    else
      pass = pass && r.rho_estimate_verdict;
    all_pass = all_pass && pass;
    std::string suffix = reports.size() > 1 ? "_" + std::to_string(k) : "";
    write_json_file(r.to_json(), args.out_dir + "/report" + suffix + ".json");
    append_csv_row(args.out_dir + "/summary.csv", "id,lhs,rhs,alpha,C_final,verdict",
                   r.csv_row());
    std::ostringstream plot;
    plot << r.amplitude << ',' << r.chain.lhs << ',' << r.chain.rhs;
    append_csv_row(args.out_dir + "/plot.csv", "amplitude,lhs,rhs", plot.str());
  }
  return all_pass ? kExitOk : kExitVerdict;
}

int run_reconstruct(const CliArgs& args) {
  ExperimentConfig cfg = parse_config_file(args.config_path, args.overrides, false);
  auto grid = build_grid(cfg.domain, cfg.n_cells);
  auto [u, rep] = solve_forward(cfg.problem1, grid);

  nlohmann::json j{{"id", cfg.id}, {"config", cfg.echo}};
  bool pass = true;

  // rho from u given gamma, A, omega^2, against the configured truth.
  if (cfg.problem1.omega2 > 0.0) {
    Reconstruction rec =
        reconstruct_rho(u, *cfg.problem1.gamma, cfg.problem1.A, cfg.problem1.omega2, cfg.u_floor);
    GridField truth = evaluate(*cfg.problem1.rho, grid);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < rec.field.size(); ++k) {
      if (!rec.mask[k]) continue;
      err = std::max(err, std::abs(rec.field[k] - truth[k]));
      scale = std::max(scale, std::abs(truth[k]));
    }
    double rel = scale > 0 ? err / scale : err;
    j["rho"] = {{"max_rel_error", rel}, {"masked_out", rec.masked_out}};
    dump_csv_file(rec.field, args.out_dir + "/rho_rec.csv");
    pass = pass && rel <= cfg.rho_tol;
  }

  // gamma by marching, seeded with the true inflow trace.
  {
    Reconstruction rec =
        reconstruct_gamma_march(u, *cfg.problem1.rho, cfg.problem1.A, cfg.problem1.omega2,
                                *cfg.problem1.gamma, cfg.grad_floor, cfg.march_direction);
    GridField truth = evaluate(*cfg.problem1.gamma, grid);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < rec.field.size(); ++k) {
      if (!rec.mask[k]) continue;
      err = std::max(err, std::abs(rec.field[k] - truth[k]));
      scale = std::max(scale, std::abs(truth[k]));
    }
    double rel = scale > 0 ? err / scale : err;
    j["gamma"] = {{"max_rel_error", rel}, {"masked_out", rec.masked_out}};
    dump_csv_file(rec.field, args.out_dir + "/gamma_rec.csv");
    pass = pass && rel <= cfg.gamma_tol;
  }

  j["verdict"] = pass;
  write_json_file(j, args.out_dir + "/reconstruct.json");
  return pass ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-interior-measurement stability laboratory"};
  app.require_subcommand(1);

  CliArgs args;
  std::string subname;
  for (const char* name :
       {"solve", "check-admissible", "verify-identity", "geometry", "stability", "reconstruct"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "experiment config JSON")->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--set", args.overrides, "override config entries, key.path=value");
    sub->add_option("--workers", args.workers, "parallel workers for experiment families");
    sub->callback([&subname, name] { subname = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ensure_directory(args.out_dir);
    if (subname == "solve") return run_solve(args);
    if (subname == "check-admissible") return run_check_admissible(args);
    if (subname == "verify-identity") return run_verify_identity(args);
    if (subname == "geometry") return run_geometry(args);
    if (subname == "stability") return run_stability(args);
    if (subname == "reconstruct") return run_reconstruct(args);
    std::cerr << "error [cli]: unknown subcommand\n";
    return kExitError;
  } catch (const Error& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error [unhandled]: " << e.what() << "\n";
    return kExitError;
  }
}
