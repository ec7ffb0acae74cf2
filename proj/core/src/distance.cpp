#include "imstab/distance.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace imstab {

static constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared-distance transform (Felzenszwalb-Huttenlocher lower envelope).
static void edt_1d(const std::vector<double>& f, std::vector<double>& d, double h) {
  int n = int(f.size());
  d.assign(n, kInf);
  std::vector<int> v(n, 0);
  std::vector<double> z(n + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  auto fq = [&](int q) { return f[q]; };
  for (int q = 1; q < n; ++q) {
    if (fq(q) == kInf) continue;
    if (fq(v[k]) == kInf) {
      v[k] = q;
      z[k] = -kInf;
      z[k + 1] = kInf;
      continue;
    }
    double s;
    while (true) {
      double pq = double(q) * h, pv = double(v[k]) * h;
      s = ((fq(q) + pq * pq) - (fq(v[k]) + pv * pv)) / (2 * pq - 2 * pv);
      if (s <= z[k] && k > 0)
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (fq(v[0]) == kInf) return;  // whole line empty
  k = 0;
  for (int q = 0; q < n; ++q) {
    double pq = double(q) * h;
    while (z[k + 1] < pq) ++k;
    double pv = double(v[k]) * h;
    d[q] = (pq - pv) * (pq - pv) + fq(v[k]);
  }
}

GridField distance_field(const NodeMask& mask, std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  int nxn = g.nodes_x(), nyn = g.nodes_y();
  std::vector<double> sq(g.node_count(), kInf);
  bool any = false;
  for (std::size_t kk = 0; kk < mask.size(); ++kk)
    if (mask[kk]) {
      sq[kk] = 0.0;
      any = true;
    }
  GridField out(grid);
  if (!any) {
    for (std::size_t kk = 0; kk < out.size(); ++kk) out[kk] = Complex(kInf, 0.0);
    return out;
  }

  std::vector<double> line, dist;
  // columns (y-direction first)
  line.resize(nyn);
  for (int i = 0; i < nxn; ++i) {
    for (int j = 0; j < nyn; ++j) line[j] = sq[g.index(i, j)];
    edt_1d(line, dist, g.hy());
    for (int j = 0; j < nyn; ++j) sq[g.index(i, j)] = dist[j];
  }
  // rows
  line.resize(nxn);
  for (int j = 0; j < nyn; ++j) {
    for (int i = 0; i < nxn; ++i) line[i] = sq[g.index(i, j)];
    edt_1d(line, dist, g.hx());
    for (int i = 0; i < nxn; ++i) sq[g.index(i, j)] = dist[i];
  }
  for (std::size_t kk = 0; kk < out.size(); ++kk) out[kk] = Complex(std::sqrt(sq[kk]), 0.0);
  return out;
}

GridField distance_field_bruteforce(const NodeMask& mask, std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  std::vector<Point> sources;
  for (std::size_t kk = 0; kk < mask.size(); ++kk)
    if (mask[kk]) sources.push_back(g.node(kk));
  GridField out(grid);
  for (std::size_t kk = 0; kk < out.size(); ++kk) {
    double best = kInf;
    Point p = g.node(kk);
    for (const Point& s : sources) {
      double d = std::hypot(p.x - s.x, p.y - s.y);
      if (d < best) best = d;
    }
    out[kk] = Complex(best, 0.0);
  }
  return out;
}

}  // namespace imstab
