#include "imstab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imstab/errors.hpp"

namespace imstab {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      fail(errc::validation, "config", "unknown key '" + it.key() + "' in " + where);
}

double get_num(const json& obj, const std::string& key, double dflt) {
  if (!obj.contains(key)) return dflt;
  return obj.at(key).get<double>();
}

// Coefficient entries accept either a bare expression string or the full
// CoefficientField object form.
CoefPtr parse_coefficient(const json& j, const std::string& where) {
  if (j.is_string())
    return std::make_shared<CoefficientField>(
        CoefficientField::from_expr(j.get<std::string>()));
  if (j.is_number())
    return std::make_shared<CoefficientField>(
        CoefficientField::constant(Complex(j.get<double>(), 0.0)));
  if (j.is_object()) return std::make_shared<CoefficientField>(CoefficientField::from_json(j.dump()));
  fail(errc::validation, "config", where + " must be an expression string or a pieces object");
}

ProblemSpec parse_problem(const json& j, const std::string& where) {
  reject_unknown(j, {"gamma", "rho", "A", "omega2", "g"}, where);
  ProblemSpec p;
  if (!j.contains("gamma")) fail(errc::validation, "config", where + " is missing 'gamma'");
  if (!j.contains("rho")) fail(errc::validation, "config", where + " is missing 'rho'");
  if (!j.contains("g")) fail(errc::validation, "config", where + " is missing 'g'");
  p.gamma = parse_coefficient(j.at("gamma"), where + ".gamma");
  p.rho = parse_coefficient(j.at("rho"), where + ".rho");
  p.omega2 = get_num(j, "omega2", 0.0);
  std::string gtext =
      j.at("g").is_string() ? j.at("g").get<std::string>() : j.at("g").at("expr").get<std::string>();
  p.g = parse_expr(gtext);
  if (j.contains("A")) {
    const json& a = j.at("A");
    reject_unknown(a, {"a11", "a12", "a22"}, where + ".A");
    p.A.a11 = a.contains("a11") ? parse_coefficient(a.at("a11"), where + ".A.a11")
                                : MatrixCoefficient::identity().a11;
    p.A.a12 = a.contains("a12") ? parse_coefficient(a.at("a12"), where + ".A.a12")
                                : MatrixCoefficient::identity().a12;
    p.A.a22 = a.contains("a22") ? parse_coefficient(a.at("a22"), where + ".A.a22")
                                : MatrixCoefficient::identity().a22;
  }
  return p;
}

json apply_overrides(json root, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      fail(errc::validation, "config", "override '" + ov + "' is not key=value");
    std::string path = ov.substr(0, eq), value = ov.substr(eq + 1);
    json* node = &root;
    std::size_t start = 0;
    while (true) {
      auto dot = path.find('.', start);
      std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (dot == std::string::npos) {
        json parsed;
        try {
          parsed = json::parse(value);
        } catch (const json::exception&) {
          parsed = value;  // bare string
        }
        (*node)[key] = parsed;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  return root;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides,
                                   bool need_problem2) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(errc::validation, "config", std::string("JSON parse error: ") + e.what());
  }
  root = apply_overrides(root, overrides);

  reject_unknown(root,
                 {"id", "mode", "domain", "grid", "problem1", "problem2", "sectors", "tube",
                  "chain", "workers", "reconstruct"},
                 "config root");

  ExperimentConfig cfg;
  cfg.id = root.value("id", std::string("experiment"));
  std::string mode = root.value("mode", std::string("gamma"));
  if (mode == "gamma")
    cfg.mode = Mode::gamma;
  else if (mode == "rho")
    cfg.mode = Mode::rho;
  else
    fail(errc::validation, "config", "mode must be 'gamma' or 'rho'");

  if (!root.contains("domain")) fail(errc::validation, "config", "missing section 'domain'");
  {
    const json& d = root.at("domain");
    reject_unknown(d, {"shape", "x_extent", "y_extent", "cx", "cy", "radius"}, "domain");
    std::string shape = d.value("shape", std::string("rectangle"));
    if (shape == "rectangle") {
      cfg.domain = Domain::rectangle(get_num(d, "x_extent", 1.0), get_num(d, "y_extent", 1.0));
    } else if (shape == "disk") {
      cfg.domain =
          Domain::disk({get_num(d, "cx", 0.0), get_num(d, "cy", 0.0)}, get_num(d, "radius", 1.0));
    } else {
      fail(errc::validation, "config", "domain.shape must be rectangle or disk");
    }
  }

  if (root.contains("grid")) {
    const json& gj = root.at("grid");
    reject_unknown(gj, {"n_cells"}, "grid");
    double n = get_num(gj, "n_cells", 128.0);
    if (n < 2.0) fail(errc::validation, "config", "grid.n_cells must be >= 2");
    cfg.n_cells = int(n);
  }

  if (!root.contains("problem1")) fail(errc::validation, "config", "missing section 'problem1'");
  cfg.problem1 = parse_problem(root.at("problem1"), "problem1");
  if (root.contains("problem2")) {
    cfg.problem2 = parse_problem(root.at("problem2"), "problem2");
  } else if (need_problem2) {
    fail(errc::validation, "config", "missing section 'problem2'");
  } else {
    cfg.problem2 = cfg.problem1;
  }

  if (root.contains("sectors")) {
    const json& s = root.at("sectors");
    reject_unknown(s, {"sigma", "h_band"}, "sectors");
    cfg.sigma = get_num(s, "sigma", 0.1 * M_PI);
    cfg.h_band = get_num(s, "h_band", 0.1);
  }
  if (!(cfg.sigma > 0.0 && cfg.sigma <= M_PI / 4.0))
    fail(errc::validation, "config", "sectors.sigma must lie in (0, pi/4]");
  cfg.problem1.sigma = cfg.problem2.sigma = cfg.sigma;

  if (root.contains("tube")) {
    const json& t = root.at("tube");
    reject_unknown(t,
                   {"eta", "margin_w", "margin_v", "margin_d", "margin_u", "tau_z_factor", "R",
                    "fit_fraction"},
                   "tube");
    if (t.contains("eta")) cfg.etas = t.at("eta").get<std::vector<double>>();
    cfg.margin_w = get_num(t, "margin_w", 0.05);
    cfg.margin_v = get_num(t, "margin_v", 0.1);
    cfg.margin_d = get_num(t, "margin_d", 0.15);
    cfg.margin_u = get_num(t, "margin_u", 0.02);
    cfg.tau_z_factor = get_num(t, "tau_z_factor", 10.0);
    cfg.R = get_num(t, "R", 0.0);
    cfg.fit_fraction = get_num(t, "fit_fraction", 1.0 / 3.0);
  }
  for (double e : cfg.etas)
    if (!(e > 0.0 && e <= 1.0)) fail(errc::validation, "config", "tube.eta entries must lie in (0,1]");
  if (!(cfg.margin_u < cfg.margin_v && cfg.margin_v < cfg.margin_d))
    fail(errc::validation, "config", "margins must nest: margin_u < margin_v < margin_d");

  if (root.contains("chain")) {
    const json& c = root.at("chain");
    reject_unknown(c, {"s", "family_amplitudes", "gn_seed", "identity_tol"}, "chain");
    if (c.contains("s")) {
      if (c.at("s").is_string() && c.at("s").get<std::string>() == "inf")
        cfg.s = std::numeric_limits<double>::infinity();
      else
        cfg.s = c.at("s").get<double>();
    }
    if (c.contains("family_amplitudes"))
      cfg.family_amplitudes = c.at("family_amplitudes").get<std::vector<double>>();
    cfg.gn_seed = unsigned(get_num(c, "gn_seed", 2024.0));
    cfg.identity_tol = get_num(c, "identity_tol", 0.05);
  }
  if (!(cfg.s > 2.0)) fail(errc::validation, "config", "chain.s must exceed n = 2");

  if (root.contains("reconstruct")) {
    const json& r = root.at("reconstruct");
    reject_unknown(r, {"u_floor", "grad_floor", "direction", "rho_tol", "gamma_tol"},
                   "reconstruct");
    cfg.u_floor = get_num(r, "u_floor", 0.1);
    cfg.grad_floor = get_num(r, "grad_floor", 0.1);
    cfg.rho_tol = get_num(r, "rho_tol", 1e-3);
    cfg.gamma_tol = get_num(r, "gamma_tol", 0.05);
    std::string dir = r.value("direction", std::string("+x1"));
    if (dir == "+x1")
      cfg.march_direction = +1;
    else if (dir == "-x1")
      cfg.march_direction = -1;
    else
      fail(errc::validation, "config", "reconstruct.direction must be +x1 or -x1");
  }

  // Echo with defaults resolved, key-sorted by the JSON object itself.
  json echo = root;
  echo["id"] = cfg.id;
  echo["mode"] = mode;
  echo["grid"] = {{"n_cells", cfg.n_cells}};
  echo["sectors"] = {{"sigma", cfg.sigma}, {"h_band", cfg.h_band}};
  echo["tube"] = {{"eta", cfg.etas},          {"margin_w", cfg.margin_w},
                  {"margin_v", cfg.margin_v}, {"margin_d", cfg.margin_d},
                  {"margin_u", cfg.margin_u}, {"tau_z_factor", cfg.tau_z_factor},
                  {"R", cfg.R},               {"fit_fraction", cfg.fit_fraction}};
  json chain_echo;
  if (std::isinf(cfg.s))
    chain_echo["s"] = "inf";
  else
    chain_echo["s"] = cfg.s;
  chain_echo["family_amplitudes"] = cfg.family_amplitudes;
  chain_echo["gn_seed"] = cfg.gn_seed;
  chain_echo["identity_tol"] = cfg.identity_tol;
  echo["chain"] = chain_echo;
  echo["reconstruct"] = {{"u_floor", cfg.u_floor},
                         {"grad_floor", cfg.grad_floor},
                         {"direction", cfg.march_direction > 0 ? "+x1" : "-x1"},
                         {"rho_tol", cfg.rho_tol},
                         {"gamma_tol", cfg.gamma_tol}};
  cfg.echo = echo;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<std::string>& overrides,
                                   bool need_problem2) {
  std::ifstream is(path);
  if (!is) fail(errc::io, "config", "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), overrides, need_problem2);
}

std::string effective_config_json(const ExperimentConfig& cfg) { return cfg.echo.dump(2); }

}  // namespace imstab
