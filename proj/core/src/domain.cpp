#include "imstab/domain.hpp"

#include <algorithm>
#include <cmath>

#include "imstab/errors.hpp"

namespace imstab {

Domain Domain::rectangle(double x_extent, double y_extent) {
  if (x_extent <= 0.0 || y_extent <= 0.0)
    fail(errc::validation, "domain", "rectangle extents must be positive");
  Domain d;
  d.shape_ = Shape::rectangle;
  d.ax_ = x_extent;
  d.ay_ = y_extent;
  return d;
}

Domain Domain::disk(Point center, double radius) {
  if (radius <= 0.0) fail(errc::validation, "domain", "disk radius must be positive");
  Domain d;
  d.shape_ = Shape::disk;
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

Point Domain::bbox_min() const {
  if (shape_ == Shape::rectangle) return {0.0, 0.0};
  return {center_.x - radius_, center_.y - radius_};
}

Point Domain::bbox_max() const {
  if (shape_ == Shape::rectangle) return {ax_, ay_};
  return {center_.x + radius_, center_.y + radius_};
}

double Domain::x_extent() const { return shape_ == Shape::rectangle ? ax_ : 2.0 * radius_; }
double Domain::y_extent() const { return shape_ == Shape::rectangle ? ay_ : 2.0 * radius_; }

bool Domain::contains(Point p) const {
  if (shape_ == Shape::rectangle)
    return p.x > 0.0 && p.x < ax_ && p.y > 0.0 && p.y < ay_;
  double dx = p.x - center_.x, dy = p.y - center_.y;
  return dx * dx + dy * dy < radius_ * radius_;
}

double Domain::boundary_distance(Point p) const {
  if (shape_ == Shape::rectangle)
    return std::min(std::min(p.x, ax_ - p.x), std::min(p.y, ay_ - p.y));
  double dx = p.x - center_.x, dy = p.y - center_.y;
  return radius_ - std::hypot(dx, dy);
}

Point Domain::project_to_boundary(Point p) const {
  if (shape_ == Shape::disk) {
    double dx = p.x - center_.x, dy = p.y - center_.y;
    double r = std::hypot(dx, dy);
    if (r == 0.0) return {center_.x + radius_, center_.y};
    return {center_.x + dx * radius_ / r, center_.y + dy * radius_ / r};
  }
  // Nearest point on the rectangle's edge.
  double cx = std::clamp(p.x, 0.0, ax_);
  double cy = std::clamp(p.y, 0.0, ay_);
  double dl = cx, dr = ax_ - cx, db = cy, dt = ay_ - cy;
  double m = std::min(std::min(dl, dr), std::min(db, dt));
  if (m == dl) return {0.0, cy};
  if (m == dr) return {ax_, cy};
  if (m == db) return {cx, 0.0};
  return {cx, ay_};
}

double Domain::perimeter() const {
  if (shape_ == Shape::rectangle) return 2.0 * (ax_ + ay_);
  return 2.0 * M_PI * radius_;
}

double Domain::diameter() const {
  if (shape_ == Shape::rectangle) return std::hypot(ax_, ay_);
  return 2.0 * radius_;
}

Grid::Grid(const Domain& domain, int nx_cells, int ny_cells) : domain_(domain) {
  if (nx_cells < 2 || ny_cells < 2)
    fail(errc::invalid_resolution, "grid", "need at least 2 cells per axis");
  nx_ = nx_cells;
  ny_ = ny_cells;
  origin_ = domain.bbox_min();
  Point hi = domain.bbox_max();
  hx_ = (hi.x - origin_.x) / nx_;
  hy_ = (hi.y - origin_.y) / ny_;

  kinds_.assign(node_count(), NodeKind::exterior);
  if (domain.shape() == Domain::Shape::rectangle) {
    for (int j = 0; j <= ny_; ++j)
      for (int i = 0; i <= nx_; ++i)
        kinds_[index(i, j)] =
            (i == 0 || i == nx_ || j == 0 || j == ny_) ? NodeKind::boundary : NodeKind::interior;
  } else {
    // Disk: interior = strictly inside; boundary = outside nodes 4-adjacent to
    // an inside node (cut-cell collocation ring). Everything else exterior.
    std::vector<std::uint8_t> inside(node_count(), 0);
    for (int j = 0; j <= ny_; ++j)
      for (int i = 0; i <= nx_; ++i)
        inside[index(i, j)] = domain.contains(node(i, j)) ? 1 : 0;
    for (int j = 0; j <= ny_; ++j)
      for (int i = 0; i <= nx_; ++i) {
        std::size_t id = index(i, j);
        if (inside[id]) {
          kinds_[id] = NodeKind::interior;
          continue;
        }
        bool touches = (i > 0 && inside[index(i - 1, j)]) || (i < nx_ && inside[index(i + 1, j)]) ||
                       (j > 0 && inside[index(i, j - 1)]) || (j < ny_ && inside[index(i, j + 1)]);
        if (touches) kinds_[id] = NodeKind::boundary;
      }
  }
}

Point Grid::node(int i, int j) const { return {origin_.x + i * hx_, origin_.y + j * hy_}; }

NodeMask Grid::interior_mask() const {
  NodeMask m(node_count(), 0);
  for (std::size_t k = 0; k < node_count(); ++k) m[k] = kinds_[k] == NodeKind::interior;
  return m;
}

NodeMask Grid::boundary_mask() const {
  NodeMask m(node_count(), 0);
  for (std::size_t k = 0; k < node_count(); ++k) m[k] = kinds_[k] == NodeKind::boundary;
  return m;
}

NodeMask Grid::shrink_mask(double depth) const {
  NodeMask m(node_count(), 0);
  for (std::size_t k = 0; k < node_count(); ++k)
    m[k] = kinds_[k] == NodeKind::interior && domain_.boundary_distance(node(k)) > depth;
  return m;
}

std::size_t Grid::count(const NodeMask& mask) const {
  std::size_t c = 0;
  for (auto v : mask) c += v ? 1 : 0;
  return c;
}

std::shared_ptr<const Grid> build_grid(const Domain& domain, int n_cells) {
  if (n_cells < 2) fail(errc::invalid_resolution, "grid", "n_cells must be >= 2");
  double ax = domain.x_extent(), ay = domain.y_extent();
  int ny = std::max(2, int(std::lround(n_cells * ay / ax)));
  return std::make_shared<Grid>(domain, n_cells, ny);
}

}  // namespace imstab
