#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace imstab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Planar domain: an axis-aligned rectangle anchored at the origin, or a disk.
// Rectangle corners are only C^0; the disk is the smooth-boundary alternative.
class Domain {
 public:
  enum class Shape { rectangle, disk };

  static Domain rectangle(double x_extent, double y_extent);
  static Domain disk(Point center, double radius);

  Shape shape() const { return shape_; }
  // Bounding box of the domain (equals the rectangle itself for rectangles).
  Point bbox_min() const;
  Point bbox_max() const;
  double x_extent() const;
  double y_extent() const;
  Point disk_center() const { return center_; }
  double disk_radius() const { return radius_; }

  bool contains(Point p) const;
  // Signed distance to the boundary, positive inside.
  double boundary_distance(Point p) const;
  // Closest point on the boundary (used for cut-cell Dirichlet collocation).
  Point project_to_boundary(Point p) const;
  double perimeter() const;
  double diameter() const;

 private:
  Shape shape_ = Shape::rectangle;
  double ax_ = 1.0, ay_ = 1.0;  // rectangle extents
  Point center_{};              // disk
  double radius_ = 1.0;
};

enum class NodeKind : std::uint8_t { exterior = 0, boundary = 1, interior = 2 };

using NodeMask = std::vector<std::uint8_t>;

// Uniform tensor grid over the domain's bounding box. Nodes are vertices,
// (nx+1) x (ny+1) of them, row-major with x fastest. Cells are near-square:
// the y-cell count is derived from the x one so hx ~= hy, exactly equal when
// the extents are commensurate.
class Grid {
 public:
  Grid(const Domain& domain, int nx_cells, int ny_cells);

  const Domain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nodes_x() const { return nx_ + 1; }
  int nodes_y() const { return ny_ + 1; }
  std::size_t node_count() const { return std::size_t(nodes_x()) * nodes_y(); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  // Characteristic spacing used in tolerances.
  double h() const { return hx_ > hy_ ? hx_ : hy_; }
  double cell_area() const { return hx_ * hy_; }

  std::size_t index(int i, int j) const { return std::size_t(j) * nodes_x() + i; }
  int node_i(std::size_t idx) const { return int(idx % nodes_x()); }
  int node_j(std::size_t idx) const { return int(idx / nodes_x()); }
  Point node(int i, int j) const;
  Point node(std::size_t idx) const { return node(node_i(idx), node_j(idx)); }

  NodeKind kind(std::size_t idx) const { return kinds_[idx]; }
  bool is_interior(std::size_t idx) const { return kinds_[idx] == NodeKind::interior; }
  bool is_boundary(std::size_t idx) const { return kinds_[idx] == NodeKind::boundary; }

  NodeMask interior_mask() const;
  NodeMask boundary_mask() const;
  // Nodes of Omega_d = {x : dist(x, complement of Omega) > d}; computed from
  // the analytic boundary distance, so the chain d1 < d2 nests exactly.
  NodeMask shrink_mask(double depth) const;
  std::size_t count(const NodeMask& mask) const;

 private:
  Domain domain_;
  int nx_, ny_;
  double hx_, hy_;
  Point origin_;
  std::vector<NodeKind> kinds_;
};

// build_grid chooses the y-cell count to keep cells as square as the extents
// allow; n_cells applies to the x axis.
std::shared_ptr<const Grid> build_grid(const Domain& domain, int n_cells);

}  // namespace imstab
