#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "imstab/domain.hpp"
#include "imstab/field.hpp"

namespace imstab::testing {

inline std::shared_ptr<const Grid> rect_grid(double ax, double ay, int n) {
  return build_grid(Domain::rectangle(ax, ay), n);
}

inline GridField sample(std::shared_ptr<const Grid> grid,
                        const std::function<Complex(double, double)>& f) {
  return GridField::sample(grid, [&](Point p) { return f(p.x, p.y); });
}

inline NodeMask all_nodes(const Grid& g) { return NodeMask(g.node_count(), 1); }

inline NodeMask domain_nodes(const Grid& g) {
  NodeMask m(g.node_count(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = g.kind(k) != NodeKind::exterior;
  return m;
}

// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& hs, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    if (!(errs[k] > 0.0)) continue;
    double lx = std::log(hs[k]), ly = std::log(errs[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace imstab::testing
