#include "imstab/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

#include "imstab/distance.hpp"
#include "imstab/errors.hpp"
#include "imstab/identity.hpp"
#include "imstab/level_set.hpp"
#include "imstab/quadrature.hpp"

namespace imstab {

double default_critical_threshold(const GridField& u1, const NodeMask& region) {
  GridField dxx = diff_xx(u1), dyy = diff_yy(u1), dxy = diff_xy(u1);
  double m = 0.0;
  for (std::size_t k = 0; k < u1.size(); ++k) {
    if (!region[k] || !dxy.valid(k)) continue;
    m = std::max(m, std::abs(dxx[k]));
    m = std::max(m, std::abs(dyy[k]));
    m = std::max(m, std::abs(dxy[k]));
  }
  return 10.0 * u1.grid().h() * m;
}

namespace {

std::vector<CriticalComponent> label_components(const NodeMask& mask, const Grid& g) {
  std::vector<CriticalComponent> comps;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    CriticalComponent comp;
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      std::size_t k = q.front();
      q.pop();
      comp.nodes.push_back(k);
      int i = g.node_i(k), j = g.node_j(k);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          int ii = i + di, jj = j + dj;
          if (ii < 0 || ii > g.nx() || jj < 0 || jj > g.ny()) continue;
          std::size_t nk = g.index(ii, jj);
          if (mask[nk] && !seen[nk]) {
            seen[nk] = 1;
            q.push(nk);
          }
        }
    }
    double sx = 0.0, sy = 0.0;
    for (std::size_t k : comp.nodes) {
      Point p = g.node(k);
      sx += p.x;
      sy += p.y;
    }
    comp.centroid = {sx / comp.nodes.size(), sy / comp.nodes.size()};
    for (std::size_t k : comp.nodes) {
      Point p = g.node(k);
      comp.radius = std::max(comp.radius, std::hypot(p.x - comp.centroid.x, p.y - comp.centroid.y));
    }
    comps.push_back(std::move(comp));
  }
  // Deterministic order by first node index.
  std::sort(comps.begin(), comps.end(),
            [](const CriticalComponent& a, const CriticalComponent& b) {
              return a.nodes.front() < b.nodes.front();
            });
  return comps;
}

constexpr int kPointCapNodes = 41;

void classify_components(std::vector<CriticalComponent>& comps, const Grid& g) {
  for (CriticalComponent& c : comps) {
    int imin = g.nx(), imax = 0, jmin = g.ny(), jmax = 0;
    for (std::size_t k : c.nodes) {
      imin = std::min(imin, g.node_i(k));
      imax = std::max(imax, g.node_i(k));
      jmin = std::min(jmin, g.node_j(k));
      jmax = std::max(jmax, g.node_j(k));
    }
    int w = imax - imin + 1, h = jmax - jmin + 1;
    double aspect = double(std::max(w, h)) / double(std::min(w, h));
    double fill = double(c.nodes.size()) / (double(w) * h);
    if (aspect < 3.0 && fill >= 0.5) {
      if (std::max(w, h) > kPointCapNodes)
        fail(errc::degenerate_stratum, "critical",
             "component is a 2-D blob (" + std::to_string(w) + "x" + std::to_string(h) + ")");
      c.kind = CriticalComponent::Kind::point;
    } else {
      c.kind = CriticalComponent::Kind::curve;
    }
  }
}

CriticalSet detect_from_scalar(const GridField& magnitude, const NodeMask& region, double tau) {
  const Grid& g = magnitude.grid();
  CriticalSet z;
  z.tau_z = tau;
  z.mask.assign(g.node_count(), 0);
  std::size_t region_count = 0, hits = 0;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    if (!region[k] || !magnitude.valid(k)) continue;
    ++region_count;
    if (magnitude[k].real() <= tau) {
      z.mask[k] = 1;
      ++hits;
    }
  }
  if (region_count > 0 && hits * 5 > region_count)
    fail(errc::degenerate_field, "critical",
         "critical mask covers more than 20% of the region; field is locally constant");
  z.components = label_components(z.mask, g);
  classify_components(z.components, g);
  return z;
}

}  // namespace

CriticalSet detect_critical_set(const GridField& u1, const NodeMask& region, double tau_z) {
  if (!(tau_z > 0.0)) fail(errc::precondition, "critical", "tau_z must be positive");
  return detect_from_scalar(gradient_magnitude(u1), region, tau_z);
}

CriticalSet detect_small_values(const GridField& f, const NodeMask& region, double tau) {
  if (!(tau > 0.0)) fail(errc::precondition, "critical", "tau must be positive");
  return detect_from_scalar(f.abs(), region, tau);
}

namespace {

// Zhang-Suen thinning on the component's bitmap.
struct Bitmap {
  int w = 0, h = 0;
  std::vector<std::uint8_t> v;
  std::uint8_t& at(int x, int y) { return v[std::size_t(y) * w + x]; }
  std::uint8_t get(int x, int y) const {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return v[std::size_t(y) * w + x];
  }
};

void thin(Bitmap& bm) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<std::pair<int, int>> kill;
      for (int y = 0; y < bm.h; ++y)
        for (int x = 0; x < bm.w; ++x) {
          if (!bm.get(x, y)) continue;
          int p2 = bm.get(x, y - 1), p3 = bm.get(x + 1, y - 1), p4 = bm.get(x + 1, y);
          int p5 = bm.get(x + 1, y + 1), p6 = bm.get(x, y + 1), p7 = bm.get(x - 1, y + 1);
          int p8 = bm.get(x - 1, y), p9 = bm.get(x - 1, y - 1);
          int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (b < 2 || b > 6) continue;
          int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
          int a = 0;
          for (int t = 0; t < 8; ++t)
            if (seq[t] == 0 && seq[t + 1] == 1) ++a;
          if (a != 1) continue;
          if (pass == 0) {
            if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
          } else {
            if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
          }
          kill.emplace_back(x, y);
        }
      for (auto [x, y] : kill) bm.at(x, y) = 0;
      if (!kill.empty()) changed = true;
    }
  }
}

// Ordered trace of a thinned skeleton. Thinning can leave fat staircase
// corners that look like junctions, so the walk marks pixels used and the
// curve is accepted as long as almost everything is covered in one pass;
// a genuine T-branch strands a whole arm and fails the coverage check.
std::vector<std::pair<int, int>> trace_skeleton(const Bitmap& bm) {
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < bm.h; ++y)
    for (int x = 0; x < bm.w; ++x)
      if (bm.get(x, y)) pixels.emplace_back(x, y);
  if (pixels.empty()) return {};
  auto degree = [&](int x, int y) {
    int d = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if ((dx || dy) && bm.get(x + dx, y + dy)) ++d;
    return d;
  };
  std::pair<int, int> start = pixels.front();
  bool has_endpoint = false;
  for (auto [x, y] : pixels)
    if (degree(x, y) <= 1) {
      start = {x, y};
      has_endpoint = true;
      break;
    }

  std::vector<std::pair<int, int>> path;
  std::vector<std::uint8_t> used(pixels.size(), 0);
  auto find_index = [&](int x, int y) -> int {
    for (std::size_t k = 0; k < pixels.size(); ++k)
      if (pixels[k] == std::make_pair(x, y)) return int(k);
    return -1;
  };
  int cur = find_index(start.first, start.second);
  while (cur >= 0) {
    used[std::size_t(cur)] = 1;
    path.push_back(pixels[std::size_t(cur)]);
    auto [cx, cy] = pixels[std::size_t(cur)];
    int next = -1;
    // Prefer axis neighbors over diagonals so staircase steps stay tight.
    const int order[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (auto& d : order) {
      int nx = cx + d[0], ny = cy + d[1];
      if (!bm.get(nx, ny)) continue;
      int idx = find_index(nx, ny);
      if (idx >= 0 && !used[std::size_t(idx)]) {
        next = idx;
        break;
      }
    }
    cur = next;
  }

  std::size_t unvisited = 0;
  for (auto u : used)
    if (!u) ++unvisited;
  if (unvisited > std::max<std::size_t>(2, pixels.size() / 50))
    fail(errc::degenerate_stratum, "critical",
         "skeleton trace left " + std::to_string(unvisited) + " of " +
             std::to_string(pixels.size()) + " pixels; component is not a simple curve");

  bool loop = !has_endpoint && path.size() > 2 &&
              std::abs(path.front().first - path.back().first) <= 1 &&
              std::abs(path.front().second - path.back().second) <= 1;
  if (loop) path.push_back(path.front());
  return path;
}

// Windowed tangent classes along the path: axis of the dominant component
// and the sign of the base step, smoothed over +-w vertices so staircase
// pixels do not fragment the runs. Loops wrap (last vertex duplicates the
// first).
struct VertClass {
  int axis = 1;
  int sign = 1;
};

std::vector<VertClass> classify_verts(const std::vector<std::pair<int, int>>& path, bool loop,
                                      int w) {
  std::size_t n = path.size();
  std::vector<VertClass> out(n);
  auto at = [&](long k) -> const std::pair<int, int>& {
    if (loop) {
      long m = long(n) - 1;
      long idx = ((k % m) + m) % m;
      return path[std::size_t(idx)];
    }
    return path[std::size_t(std::clamp<long>(k, 0, long(n) - 1))];
  };
  int prev_axis = 0;
  for (std::size_t k = 0; k < n; ++k) {
    auto [ax_, ay_] = at(long(k) - w);
    auto [bx_, by_] = at(long(k) + w);
    double dx = double(bx_ - ax_), dy = double(by_ - ay_);
    int axis;
    if (std::abs(dx) > 1.02 * std::abs(dy))
      axis = 1;
    else if (std::abs(dy) > 1.02 * std::abs(dx))
      axis = 2;
    else
      axis = prev_axis ? prev_axis : (std::abs(dx) >= std::abs(dy) ? 1 : 2);
    out[k].axis = axis;
    out[k].sign = (axis == 1 ? dx : dy) >= 0 ? 1 : -1;
    prev_axis = axis;
  }
  return out;
}

}  // namespace

StrataDecomposition extract_strata(const CriticalSet& z, const Grid& grid) {
  if (z.empty()) fail(errc::refusal, "critical", "critical set is empty");
  StrataDecomposition out;
  for (const CriticalComponent& comp : z.components) {
    if (comp.kind == CriticalComponent::Kind::point) {
      out.points.push_back({comp.centroid, comp.radius});
      continue;
    }
    // Curve: local bitmap, thin, trace, simplify.
    int imin = grid.nx(), imax = 0, jmin = grid.ny(), jmax = 0;
    for (std::size_t k : comp.nodes) {
      imin = std::min(imin, grid.node_i(k));
      imax = std::max(imax, grid.node_i(k));
      jmin = std::min(jmin, grid.node_j(k));
      jmax = std::max(jmax, grid.node_j(k));
    }
    Bitmap bm;
    bm.w = imax - imin + 1;
    bm.h = jmax - jmin + 1;
    bm.v.assign(std::size_t(bm.w) * bm.h, 0);
    for (std::size_t k : comp.nodes) bm.at(grid.node_i(k) - imin, grid.node_j(k) - jmin) = 1;
    thin(bm);
    auto path = trace_skeleton(bm);
    if (path.size() < 2)
      fail(errc::degenerate_stratum, "critical", "curve component too short to trace");

    bool loop = path.size() > 2 && path.front() == path.back();

    // For loops, rotate the start to a class boundary so one arc is not
    // split across the seam of the traversal.
    if (loop) {
      path.pop_back();
      std::vector<std::pair<int, int>> closed = path;
      closed.push_back(closed.front());
      std::vector<VertClass> probe = classify_verts(closed, true, 4);
      std::size_t pivot = 0;
      for (std::size_t k = 1; k + 1 < probe.size(); ++k)
        if (probe[k].axis != probe[k - 1].axis || probe[k].sign != probe[k - 1].sign) {
          pivot = k;
          break;
        }
      std::rotate(path.begin(), path.begin() + pivot, path.end());
      path.push_back(path.front());
    }

    std::vector<Point> poly;
    poly.reserve(path.size());
    for (auto [x, y] : path) poly.push_back(grid.node(x + imin, y + jmin));

    // Thickness: how far component nodes stray from the traced skeleton.
    double thick = 0.0;
    for (std::size_t k : comp.nodes) {
      Point p = grid.node(k);
      double best = std::numeric_limits<double>::infinity();
      for (const Point& q : poly) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      thick = std::max(thick, best);
    }

    // Maximal runs of constant windowed class become the monotone graph
    // pieces. Vertical staircase steps within an axis-1 run are folded onto
    // their base coordinate (the exit value wins), so consecutive samples
    // differ by single steps and the sampled slopes stay near the cell
    // aspect ratio.
    std::vector<VertClass> cls = classify_verts(path, loop, 4);
    std::size_t k = 0;
    while (k + 1 < poly.size()) {
      std::size_t end = k;
      while (end + 1 < poly.size() && cls[end + 1].axis == cls[k].axis &&
             cls[end + 1].sign == cls[k].sign)
        ++end;
      if (end > k) {
        GraphStratum gs;
        gs.axis = cls[k].axis;
        gs.thickness = thick;
        double sgn = cls[k].sign;
        for (std::size_t t = k; t <= end; ++t) {
          double b = gs.axis == 1 ? poly[t].x : poly[t].y;
          double v = gs.axis == 1 ? poly[t].y : poly[t].x;
          if (!gs.base.empty() && std::abs(b - gs.base.back()) <= 1e-12) {
            gs.values.back() = v;
            continue;
          }
          if (!gs.base.empty() && sgn * (b - gs.base.back()) < 0.0) continue;
          gs.base.push_back(b);
          gs.values.push_back(v);
        }
        if (gs.base.size() >= 2) {
          if (sgn < 0) {
            std::reverse(gs.base.begin(), gs.base.end());
            std::reverse(gs.values.begin(), gs.values.end());
          }
          for (std::size_t t = 0; t + 1 < gs.base.size(); ++t)
            gs.lipschitz = std::max(
                gs.lipschitz,
                std::abs(gs.values[t + 1] - gs.values[t]) / (gs.base[t + 1] - gs.base[t]));
          out.graphs.push_back(std::move(gs));
        }
      }
      k = end + 1;
    }
  }
  return out;
}

namespace {

double graph_eval_clamped(const GraphStratum& g, double b) {
  if (b <= g.base.front()) return g.values.front();
  if (b >= g.base.back()) return g.values.back();
  auto it = std::upper_bound(g.base.begin(), g.base.end(), b);
  std::size_t hi = std::size_t(it - g.base.begin());
  std::size_t lo = hi - 1;
  double t = (b - g.base[lo]) / (g.base[hi] - g.base[lo]);
  return g.values[lo] + t * (g.values[hi] - g.values[lo]);
}

}  // namespace

NodeMask build_slab_cover(const StrataDecomposition& strata, double eta, double R,
                          const Grid& grid) {
  if (!(eta > 0.0 && eta <= 1.0)) fail(errc::precondition, "critical", "eta must lie in (0,1]");
  double half_extent = 0.5 * std::max(grid.domain().x_extent(), grid.domain().y_extent());
  if (R < half_extent)
    fail(errc::precondition, "critical", "R must be at least half the domain extent");

  NodeMask mask(grid.node_count(), 0);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    Point p = grid.node(k);
    bool in = false;
    for (const PointStratum& ps : strata.points) {
      if (std::abs(p.y - ps.p.y) < eta + ps.radius && std::abs(p.x - ps.p.x) < R + ps.radius) {
        in = true;
        break;
      }
    }
    if (!in)
      for (const GraphStratum& gs : strata.graphs) {
        double b = gs.axis == 1 ? p.x : p.y;
        double v = gs.axis == 1 ? p.y : p.x;
        double center = 0.5 * (gs.base.front() + gs.base.back());
        if (std::abs(b - center) >= R + gs.thickness) continue;
        if (std::abs(v - graph_eval_clamped(gs, b)) < eta + gs.thickness) {
          in = true;
          break;
        }
      }
    mask[k] = in ? 1 : 0;
  }
  return mask;
}

namespace {

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0)) continue;
    double lx = std::log(xs[k]), ly = std::log(ys[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TubeFit fit_tube_constants(const StrataDecomposition& strata, const CriticalSet& z,
                           const Grid& grid, const std::vector<double>& etas, double R) {
  if (strata.empty()) fail(errc::refusal, "critical", "no strata to cover");
  if (etas.size() < 4) fail(errc::precondition, "critical", "need at least 4 eta samples");

  TubeFit fit;
  fit.eta = etas;
  std::sort(fit.eta.begin(), fit.eta.end());

  auto gp = std::make_shared<Grid>(grid);
  GridField dist = distance_field(z.mask, gp);

  fit.cover_ok = true;
  std::vector<double> ball_vols;
  for (double eta : fit.eta) {
    NodeMask cover = build_slab_cover(strata, eta, R, grid);
    double vol = mask_area(grid, cover);
    fit.vol.push_back(vol);
    fit.C1 = std::max(fit.C1, vol / eta);

    for (std::size_t k = 0; k < z.mask.size(); ++k)
      if (z.mask[k] && !cover[k]) fit.cover_ok = false;

    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cover.size(); ++k)
      if (!cover[k]) min_ratio = std::min(min_ratio, dist[k].real() / eta);
    fit.min_dist_ratio.push_back(min_ratio);

    NodeMask ball(grid.node_count(), 0);
    for (std::size_t k = 0; k < ball.size(); ++k) ball[k] = dist[k].real() < eta ? 1 : 0;
    ball_vols.push_back(mask_area(grid, ball));
  }
  fit.vol_exponent = loglog_slope(fit.eta, fit.vol);
  fit.ball_exponent = loglog_slope(fit.eta, ball_vols);
  fit.C2 = *std::min_element(fit.min_dist_ratio.begin(), fit.min_dist_ratio.end());
  return fit;
}

GridField skeleton_distance(const CriticalSet& z, std::shared_ptr<const Grid> grid) {
  // Representative nodes: centroids for point components, thinned skeletons
  // for curve components.
  const Grid& g = *grid;
  NodeMask core(g.node_count(), 0);
  StrataDecomposition strata = extract_strata(z, g);
  Point lo = g.domain().bbox_min();
  auto mark = [&](Point p) {
    int i = std::clamp(int(std::lround((p.x - lo.x) / g.hx())), 0, g.nx());
    int j = std::clamp(int(std::lround((p.y - lo.y) / g.hy())), 0, g.ny());
    core[g.index(i, j)] = 1;
  };
  for (const PointStratum& ps : strata.points) mark(ps.p);
  for (const GraphStratum& gs : strata.graphs)
    for (std::size_t t = 0; t < gs.base.size(); ++t) {
      // Dense resample between simplified vertices so the mask is connected.
      if (t + 1 < gs.base.size()) {
        double b0 = gs.base[t], b1 = gs.base[t + 1];
        int steps = std::max(1, int(std::ceil(std::abs(b1 - b0) / g.h())));
        for (int s = 0; s <= steps; ++s) {
          double b = b0 + (b1 - b0) * s / steps;
          double v = graph_eval_clamped(gs, b);
          mark(gs.axis == 1 ? Point{b, v} : Point{v, b});
        }
      } else {
        double v = gs.values[t];
        mark(gs.axis == 1 ? Point{gs.base[t], v} : Point{v, gs.base[t]});
      }
    }
  return distance_field(core, grid);
}

LojaFit fit_lojasiewicz(const GridField& f, const CriticalSet& z, const NodeMask& v_mask,
                        double fit_fraction) {
  if (z.empty())
    fail(errc::refusal, "critical", "critical set empty; bound the field below directly");
  auto grid = f.grid_ptr();
  GridField dist = skeleton_distance(z, grid);

  double h = grid->h();
  double d_lo = 2.0 * h, d_max = 0.0;
  double f_min = std::numeric_limits<double>::infinity(), f_max = 0.0;
  std::vector<std::pair<double, double>> samples;  // (d, f)
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!v_mask[k] || !f.valid(k)) continue;
    double fv = f[k].real();
    f_min = std::min(f_min, fv);
    f_max = std::max(f_max, fv);
    double d = dist[k].real();
    if (d < d_lo) continue;
    d_max = std::max(d_max, d);
    samples.emplace_back(d, fv);
  }
  if (samples.empty()) fail(errc::refusal, "critical", "V has no nodes away from Z");

  LojaFit fit;
  fit.nonbinding = f_min > 0.01 * f_max;
  fit.fit_window_hi = std::max(fit_fraction * d_max, 4.0 * h);

  // 1% lower-quantile envelope over log-distance bins inside the window.
  const int n_bins = 24;
  double llo = std::log(d_lo), lhi = std::log(fit.fit_window_hi);
  std::vector<std::vector<double>> bins(n_bins);
  for (auto [d, fv] : samples) {
    if (d > fit.fit_window_hi || fv <= 0.0) continue;
    int b = int((std::log(d) - llo) / (lhi - llo) * n_bins);
    b = std::clamp(b, 0, n_bins - 1);
    bins[std::size_t(b)].push_back(fv);
  }
  std::vector<double> bd, bq;
  for (int b = 0; b < n_bins; ++b) {
    auto& v = bins[std::size_t(b)];
    if (v.size() < 5) continue;
    std::size_t q = std::max<std::size_t>(0, v.size() / 100);
    std::nth_element(v.begin(), v.begin() + q, v.end());
    bd.push_back(std::exp(llo + (b + 0.5) * (lhi - llo) / n_bins));
    bq.push_back(v[q]);
  }
  if (bd.size() < 3) fail(errc::refusal, "critical", "too few usable distance bins for the fit");
  fit.r = loglog_slope(bd, bq);

  double c3 = std::numeric_limits<double>::infinity();
  double c3_near = std::numeric_limits<double>::infinity();
  for (auto [d, fv] : samples) {
    double ratio = fv / std::pow(d, fit.r);
    c3 = std::min(c3, ratio);
    if (d <= fit.fit_window_hi) c3_near = std::min(c3_near, ratio);
  }
  fit.C3 = c3;
  fit.C3_near = c3_near;

  std::size_t good = 0;
  for (auto [d, fv] : samples)
    if (fv + 1e-12 * f_max >= fit.C3 * std::pow(d, fit.r)) ++good;
  fit.certificate_fraction = double(good) / double(samples.size());
  return fit;
}

LojaFit fit_lojasiewicz_energy(const GridField& u1, const MatrixCoefficient& A,
                               const CriticalSet& z, const NodeMask& v_mask) {
  return fit_lojasiewicz(energy_density(u1, A).real_part(), z, v_mask);
}

LevelProfile level_measure_profile(const GridField& f, const std::vector<double>& ts,
                                   const NodeMask& z_mask, const std::vector<double>& eps,
                                   const NodeMask& region) {
  LevelProfile prof;
  prof.t_values = ts;
  prof.eps_values = eps;

  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!region[k] || !f.valid(k)) continue;
    fmin = std::min(fmin, f[k].real());
    fmax = std::max(fmax, f[k].real());
  }
  double span = fmax - fmin;
  if (span < 1e-14 * std::max(std::abs(fmax), 1.0)) {
    prof.constant_exceptional = true;  // E = {c}
    prof.M_f = 0.0;
    prof.table.assign(eps.size(), std::vector<double>(ts.size(), 0.0));
    prof.sup_per_eps.assign(eps.size(), 0.0);
    return prof;
  }

  for (double t : ts) prof.M_f = std::max(prof.M_f, level_measure(f, t, region));

  GridField dist = distance_field(z_mask, f.grid_ptr());
  for (double e : eps) {
    NodeMask near(region.size(), 0);
    for (std::size_t k = 0; k < near.size(); ++k)
      near[k] = region[k] && dist[k].real() <= e;
    std::vector<double> row;
    double sup = 0.0;
    for (double t : ts) {
      double len = level_measure(f, t, near);
      row.push_back(len);
      sup = std::max(sup, len);
    }
    prof.table.push_back(std::move(row));
    prof.sup_per_eps.push_back(sup);
  }
  return prof;
}

nlohmann::json LojaFit::to_json() const {
  return nlohmann::json{{"r", r},
                        {"C3", C3},
                        {"C3_near", C3_near},
                        {"certificate_fraction", certificate_fraction},
                        {"nonbinding", nonbinding},
                        {"fit_window_hi", fit_window_hi}};
}

nlohmann::json TubeFit::to_json() const {
  return nlohmann::json{{"eta", eta},
                        {"vol", vol},
                        {"C1", C1},
                        {"vol_exponent", vol_exponent},
                        {"C2", C2},
                        {"ball_exponent", ball_exponent},
                        {"cover_ok", cover_ok},
                        {"min_dist_ratio", min_dist_ratio},
                        {"lojasiewicz", loja.to_json()}};
}

void TubeFit::dump_csv(std::ostream& os) const {
  os << "eta,vol,vol_over_eta,min_dist_ratio\n";
  for (std::size_t k = 0; k < eta.size(); ++k)
    os << eta[k] << ',' << vol[k] << ',' << vol[k] / eta[k] << ',' << min_dist_ratio[k] << '\n';
}

nlohmann::json LevelProfile::to_json() const {
  return nlohmann::json{{"t", t_values},
                        {"eps", eps_values},
                        {"M_f", M_f},
                        {"table", table},
                        {"sup_per_eps", sup_per_eps},
                        {"constant_exceptional", constant_exceptional}};
}

}  // namespace imstab
