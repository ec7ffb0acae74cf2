#include "imstab/level_set.hpp"

#include <cmath>

#include "imstab/errors.hpp"

namespace imstab {

double segment_length(const Segment& s) { return std::hypot(s.b.x - s.a.x, s.b.y - s.a.y); }

namespace {

// Crossing point on an edge from p0 (value v0) to p1 (value v1).
Point lerp_edge(Point p0, Point p1, double v0, double v1) {
  double t = (v0 == v1) ? 0.5 : v0 / (v0 - v1);
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
}

}  // namespace

std::vector<Segment> extract_level_segments(const GridField& f, double level,
                                            const NodeMask& mask) {
  const Grid& g = f.grid();
  if (mask.size() != g.node_count())
    fail(errc::precondition, "level_set", "mask size does not match grid");
  std::vector<Segment> segs;

  for (int cj = 0; cj < g.ny(); ++cj)
    for (int ci = 0; ci < g.nx(); ++ci) {
      std::size_t k00 = g.index(ci, cj), k10 = g.index(ci + 1, cj);
      std::size_t k01 = g.index(ci, cj + 1), k11 = g.index(ci + 1, cj + 1);
      if (!(mask[k00] && mask[k10] && mask[k01] && mask[k11])) continue;
      if (!(f.valid(k00) && f.valid(k10) && f.valid(k01) && f.valid(k11))) continue;

      double v00 = f[k00].real() - level, v10 = f[k10].real() - level;
      double v01 = f[k01].real() - level, v11 = f[k11].real() - level;
      // Corner c counts as "above" when >= 0; an all-zero cell contributes
      // nothing (the level set is area-like there, not a curve).
      int c = (v00 >= 0) | ((v10 >= 0) << 1) | ((v11 >= 0) << 2) | ((v01 >= 0) << 3);
      if (c == 0 || c == 15) continue;

      Point p00 = g.node(ci, cj), p10 = g.node(ci + 1, cj);
      Point p01 = g.node(ci, cj + 1), p11 = g.node(ci + 1, cj + 1);
      Point eb = lerp_edge(p00, p10, v00, v10);  // bottom
      Point er = lerp_edge(p10, p11, v10, v11);  // right
      Point et = lerp_edge(p01, p11, v01, v11);  // top
      Point el = lerp_edge(p00, p01, v00, v01);  // left

      switch (c) {
        case 1: case 14: segs.push_back({el, eb}); break;
        case 2: case 13: segs.push_back({eb, er}); break;
        case 3: case 12: segs.push_back({el, er}); break;
        case 4: case 11: segs.push_back({er, et}); break;
        case 6: case 9:  segs.push_back({eb, et}); break;
        case 7: case 8:  segs.push_back({el, et}); break;
        case 5: case 10: {
          // Saddle: disambiguate with the cell-center value.
          double vc = 0.25 * (v00 + v10 + v01 + v11);
          bool center_above = vc >= 0;
          if ((c == 5) == center_above) {
            segs.push_back({el, et});
            segs.push_back({eb, er});
          } else {
            segs.push_back({el, eb});
            segs.push_back({er, et});
          }
          break;
        }
        default: break;
      }
    }
  return segs;
}

double level_measure(const GridField& f, double level, const NodeMask& mask) {
  double len = 0.0;
  for (const Segment& s : extract_level_segments(f, level, mask)) len += segment_length(s);
  return len;
}

}  // namespace imstab
