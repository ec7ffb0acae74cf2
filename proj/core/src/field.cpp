#include "imstab/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "imstab/errors.hpp"

namespace imstab {

GridField::GridField(std::shared_ptr<const Grid> grid, Complex fill)
    : grid_(std::move(grid)), values_(grid_->node_count(), fill), valid_(grid_->node_count(), 1) {}

GridField GridField::sample(std::shared_ptr<const Grid> grid,
                            const std::function<Complex(Point)>& f) {
  GridField out(grid);
  for (std::size_t k = 0; k < out.size(); ++k) out.values_[k] = f(grid->node(k));
  return out;
}

bool GridField::is_real(double tol) const {
  for (std::size_t k = 0; k < size(); ++k)
    if (valid_[k] && std::abs(values_[k].imag()) > tol) return false;
  return true;
}

double GridField::max_abs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < size(); ++k)
    if (valid_[k]) m = std::max(m, std::abs(values_[k]));
  return m;
}

bool GridField::cell_valid(int ci, int cj) const {
  const Grid& g = *grid_;
  return valid_[g.index(ci, cj)] && valid_[g.index(ci + 1, cj)] && valid_[g.index(ci, cj + 1)] &&
         valid_[g.index(ci + 1, cj + 1)];
}

Complex GridField::interpolate(Point p) const {
  const Grid& g = *grid_;
  Point lo = g.domain().bbox_min();
  double fx = (p.x - lo.x) / g.hx();
  double fy = (p.y - lo.y) / g.hy();
  int ci = std::clamp(int(std::floor(fx)), 0, g.nx() - 1);
  int cj = std::clamp(int(std::floor(fy)), 0, g.ny() - 1);
  double tx = fx - ci, ty = fy - cj;
  Complex v00 = values_[g.index(ci, cj)], v10 = values_[g.index(ci + 1, cj)];
  Complex v01 = values_[g.index(ci, cj + 1)], v11 = values_[g.index(ci + 1, cj + 1)];
  return v00 * ((1 - tx) * (1 - ty)) + v10 * (tx * (1 - ty)) + v01 * ((1 - tx) * ty) +
         v11 * (tx * ty);
}

GridField GridField::real_part() const {
  GridField out = *this;
  for (auto& v : out.values_) v = Complex(v.real(), 0.0);
  return out;
}

GridField GridField::imag_part() const {
  GridField out = *this;
  for (auto& v : out.values_) v = Complex(v.imag(), 0.0);
  return out;
}

GridField GridField::abs() const {
  GridField out = *this;
  for (auto& v : out.values_) v = Complex(std::abs(v), 0.0);
  return out;
}

static void check_same_grid(const GridField& a, const GridField& b) {
  if (a.grid_ptr().get() != b.grid_ptr().get() &&
      (a.grid().nx() != b.grid().nx() || a.grid().ny() != b.grid().ny()))
    fail(errc::precondition, "field", "operands live on different grids");
}

GridField operator+(const GridField& a, const GridField& b) {
  check_same_grid(a, b);
  GridField out = a;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values_[k] += b.values_[k];
    out.valid_[k] = a.valid_[k] && b.valid_[k];
  }
  return out;
}

GridField operator-(const GridField& a, const GridField& b) {
  check_same_grid(a, b);
  GridField out = a;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values_[k] -= b.values_[k];
    out.valid_[k] = a.valid_[k] && b.valid_[k];
  }
  return out;
}

GridField operator*(const GridField& a, const GridField& b) {
  check_same_grid(a, b);
  GridField out = a;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values_[k] *= b.values_[k];
    out.valid_[k] = a.valid_[k] && b.valid_[k];
  }
  return out;
}

GridField GridField::scaled(Complex c) const {
  GridField out = *this;
  for (auto& v : out.values_) v *= c;
  return out;
}

template <typename Stencil>
static GridField apply_stencil(const GridField& f, int ri, int rj, Stencil s) {
  auto gp = f.grid_ptr();
  const Grid& g = *gp;
  GridField out(gp);
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) {
      std::size_t id = g.index(i, j);
      bool ok = i >= ri && i <= g.nx() - ri && j >= rj && j <= g.ny() - rj;
      if (ok)
        for (int dj = -rj; dj <= rj && ok; ++dj)
          for (int di = -ri; di <= ri && ok; ++di) ok = f.valid(g.index(i + di, j + dj));
      if (ok) {
        out[id] = s(i, j);
      } else {
        out[id] = Complex(0.0, 0.0);
        out.set_valid(id, false);
      }
    }
  return out;
}

GridField diff_x(const GridField& f) {
  const Grid& g = f.grid();
  double inv = 1.0 / (2.0 * g.hx());
  return apply_stencil(f, 1, 0, [&](int i, int j) { return (f.at(i + 1, j) - f.at(i - 1, j)) * inv; });
}

GridField diff_y(const GridField& f) {
  const Grid& g = f.grid();
  double inv = 1.0 / (2.0 * g.hy());
  return apply_stencil(f, 0, 1, [&](int i, int j) { return (f.at(i, j + 1) - f.at(i, j - 1)) * inv; });
}

GridField diff_xx(const GridField& f) {
  const Grid& g = f.grid();
  double inv = 1.0 / (g.hx() * g.hx());
  return apply_stencil(f, 1, 0, [&](int i, int j) {
    return (f.at(i + 1, j) - 2.0 * f.at(i, j) + f.at(i - 1, j)) * inv;
  });
}

GridField diff_yy(const GridField& f) {
  const Grid& g = f.grid();
  double inv = 1.0 / (g.hy() * g.hy());
  return apply_stencil(f, 0, 1, [&](int i, int j) {
    return (f.at(i, j + 1) - 2.0 * f.at(i, j) + f.at(i, j - 1)) * inv;
  });
}

GridField diff_xy(const GridField& f) {
  const Grid& g = f.grid();
  double inv = 1.0 / (4.0 * g.hx() * g.hy());
  return apply_stencil(f, 1, 1, [&](int i, int j) {
    return (f.at(i + 1, j + 1) - f.at(i - 1, j + 1) - f.at(i + 1, j - 1) + f.at(i - 1, j - 1)) * inv;
  });
}

GridField gradient_magnitude(const GridField& f) {
  GridField fx = diff_x(f), fy = diff_y(f);
  GridField out = fx;
  for (std::size_t k = 0; k < out.size(); ++k) {
    double m = std::hypot(std::abs(fx[k]), std::abs(fy[k]));
    out[k] = Complex(m, 0.0);
    out.set_valid(k, fx.valid(k) && fy.valid(k));
  }
  return out;
}

static void put_double(std::ostream& os, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

void dump_csv(const GridField& f, std::ostream& os) {
  os << "x,y,re,im\n";
  const Grid& g = f.grid();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) {
      Point p = g.node(i, j);
      Complex v = f.at(i, j);
      put_double(os, p.x);
      os << ',';
      put_double(os, p.y);
      os << ',';
      put_double(os, v.real());
      os << ',';
      put_double(os, v.imag());
      os << '\n';
    }
}

void dump_csv_file(const GridField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(errc::io, "field", "cannot open " + path);
  dump_csv(f, os);
}

}  // namespace imstab
