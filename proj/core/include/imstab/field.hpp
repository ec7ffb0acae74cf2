#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "imstab/domain.hpp"

namespace imstab {

using Complex = std::complex<double>;

// Scalar field sampled at grid nodes. Values are stored complex; real-valued
// fields carry identically zero imaginary parts. `valid` marks nodes where
// the value is meaningful (derivative fields shrink it by one layer).
class GridField {
 public:
  GridField() = default;
  explicit GridField(std::shared_ptr<const Grid> grid, Complex fill = Complex(0.0, 0.0));

  static GridField sample(std::shared_ptr<const Grid> grid,
                          const std::function<Complex(Point)>& f);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  Complex& operator[](std::size_t k) { return values_[k]; }
  const Complex& operator[](std::size_t k) const { return values_[k]; }
  Complex at(int i, int j) const { return values_[grid_->index(i, j)]; }

  bool valid(std::size_t k) const { return valid_[k] != 0; }
  void set_valid(std::size_t k, bool v) { valid_[k] = v ? 1 : 0; }
  const NodeMask& validity() const { return valid_; }
  NodeMask& validity() { return valid_; }

  bool is_real(double tol = 0.0) const;
  double max_abs() const;  // over valid nodes

  // Bilinear interpolation of the stored values at an arbitrary point
  // (requires the four surrounding nodes to be valid).
  Complex interpolate(Point p) const;
  bool cell_valid(int ci, int cj) const;

  // Nodewise helpers; validity is intersected.
  GridField real_part() const;
  GridField imag_part() const;
  GridField abs() const;
  friend GridField operator+(const GridField& a, const GridField& b);
  friend GridField operator-(const GridField& a, const GridField& b);
  friend GridField operator*(const GridField& a, const GridField& b);
  GridField scaled(Complex c) const;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<Complex> values_;
  NodeMask valid_;
};

// Second-order central differences. The result is valid where the stencil's
// neighbors are valid; the outermost layer always drops out.
GridField diff_x(const GridField& f);
GridField diff_y(const GridField& f);
GridField diff_xx(const GridField& f);
GridField diff_yy(const GridField& f);
GridField diff_xy(const GridField& f);

// |grad f| with complex components: sqrt(|f_x|^2 + |f_y|^2).
GridField gradient_magnitude(const GridField& f);

// CSV dump, header "x,y,re,im", row-major node order, shortest round-trip
// float formatting. Real fields write im=0 exactly.
void dump_csv(const GridField& f, std::ostream& os);
void dump_csv_file(const GridField& f, const std::string& path);

}  // namespace imstab
