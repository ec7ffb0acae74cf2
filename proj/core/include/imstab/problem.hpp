#pragma once

#include <array>

#include "imstab/coefficient.hpp"

namespace imstab {

// Hermitian 2x2 coefficient matrix A. Only a11, a12, a22 are stored;
// a21 is conj(a12) by construction.
struct MatrixCoefficient {
  CoefPtr a11, a12, a22;

  static MatrixCoefficient identity();
  std::array<Complex, 4> eval(Point p) const;  // row-major a11 a12 a21 a22
};

struct ProblemSpec {
  MatrixCoefficient A = MatrixCoefficient::identity();
  CoefPtr gamma;
  CoefPtr rho;
  double omega2 = 0.0;
  ExprPtr g;          // Dirichlet trace, closed form
  double sigma = 0.1 * M_PI;

  // Validates the standing hypotheses by sampling on the grid:
  //  - A Hermitian positive definite (min eigenvalue > 0),
  //  - Re gamma > 0; if Im gamma is nonvanishing then Im gamma > 0 and
  //    Im rho <= 0,
  //  - W^{1,inf} bounds ||A|| <= 1/sigma and ||gamma|| <= 1/sigma.
  void validate(const Grid& grid) const;
};

}  // namespace imstab
