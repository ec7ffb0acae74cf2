#pragma once

#include <nlohmann/json.hpp>

#include "imstab/field.hpp"
#include "imstab/problem.hpp"

namespace imstab {

struct CriticalComponent {
  enum class Kind { point, curve };
  Kind kind = Kind::point;
  std::vector<std::size_t> nodes;
  Point centroid{};
  double radius = 0.0;  // max node distance to the centroid
};

struct CriticalSet {
  NodeMask mask;
  double tau_z = 0.0;
  std::vector<CriticalComponent> components;
  bool empty() const { return components.empty(); }
};

// Scale-aware default threshold: the gradient can drift by about
// h * max|D^2 u| within one cell, with a factor-10 guard. The curvature
// scale is measured over the detection region (cut-cell boundary data on
// disk domains would otherwise pollute it).
double default_critical_threshold(const GridField& u1, const NodeMask& region);

// Nodes of the region with |grad_h u1| <= tau_z, labeled into components
// (8-connectivity). Errors out when the mask covers more than 20% of the
// region (a locally constant field, excluded by unique continuation).
CriticalSet detect_critical_set(const GridField& u1, const NodeMask& region, double tau_z);

// Same machinery on |f| directly; used for the nodal set {u1 = 0} in the
// rho-identification mode.
CriticalSet detect_small_values(const GridField& f, const NodeMask& region, double tau);

struct PointStratum {
  Point p{};
  double radius = 0.0;
};

// Monotone Lipschitz graph piece: axis==1 means x2 = phi(x1) over the base
// interval in x1; axis==2 means x1 = phi(x2).
struct GraphStratum {
  int axis = 1;
  std::vector<double> base;    // strictly monotone sample abscissae
  std::vector<double> values;  // phi at the samples
  double lipschitz = 0.0;
  double thickness = 0.0;      // half-width of the originating component
};

struct StrataDecomposition {
  std::vector<PointStratum> points;
  std::vector<GraphStratum> graphs;
  bool empty() const { return points.empty() && graphs.empty(); }
};

// Points stay points; curve components are thinned to a one-node skeleton,
// traced, simplified, and split into monotone graph pieces with slope <= ~1
// over the better axis. A component that is neither is a degenerate stratum.
StrataDecomposition extract_strata(const CriticalSet& z, const Grid& grid);

// Union of coordinate slabs around the strata: width 2*(eta + thickness) in
// the graph's value axis, extent R in the base axis (graph functions extend
// by endpoint clamping). Monotone in eta by construction.
NodeMask build_slab_cover(const StrataDecomposition& strata, double eta, double R,
                          const Grid& grid);

struct LojaFit {
  double r = 0.0;
  double C3 = 0.0;        // min over V of f / d^r  (certificate constant)
  double C3_near = 0.0;   // same min over the asymptotic fit window
  double certificate_fraction = 0.0;
  bool nonbinding = false;
  double fit_window_hi = 0.0;
  nlohmann::json to_json() const;
};

struct TubeFit {
  std::vector<double> eta;
  std::vector<double> vol;
  double C1 = 0.0;
  double vol_exponent = 0.0;
  double C2 = 0.0;
  double ball_exponent = 0.0;  // diagnostic: naive distance-ball cover
  bool cover_ok = false;       // every Z node inside U(eta) for every eta
  LojaFit loja;
  nlohmann::json to_json() const;
  void dump_csv(std::ostream& os) const;  // eta, vol, vol_over_eta, min_dist_ratio
  std::vector<double> min_dist_ratio;
};

TubeFit fit_tube_constants(const StrataDecomposition& strata, const CriticalSet& z,
                           const Grid& grid, const std::vector<double>& etas, double R);

// Lower-envelope exponent fit of f >= C3 * dist^r. Distances are measured to
// the strata skeleton (centroids and traced polylines), not the raw blob, so
// the threshold inflation of Z does not bias r. The fit window is
// d in [2h, fit_fraction * d_max]; C3 is the global min over V.
LojaFit fit_lojasiewicz(const GridField& f, const CriticalSet& z, const NodeMask& v_mask,
                        double fit_fraction = 1.0 / 3.0);

// Convenience: f = A grad u1 . conj(grad u1).
LojaFit fit_lojasiewicz_energy(const GridField& u1, const MatrixCoefficient& A,
                               const CriticalSet& z, const NodeMask& v_mask);

// Distance to the strata skeleton of z (refined representative nodes).
GridField skeleton_distance(const CriticalSet& z, std::shared_ptr<const Grid> grid);

struct LevelProfile {
  std::vector<double> t_values;
  std::vector<double> eps_values;
  double M_f = 0.0;                        // sup_t H1({f=t}) over the region
  std::vector<std::vector<double>> table;  // [eps][t]
  std::vector<double> sup_per_eps;
  bool constant_exceptional = false;
  nlohmann::json to_json() const;
};

LevelProfile level_measure_profile(const GridField& f, const std::vector<double>& ts,
                                   const NodeMask& z_mask, const std::vector<double>& eps,
                                   const NodeMask& region);

}  // namespace imstab
