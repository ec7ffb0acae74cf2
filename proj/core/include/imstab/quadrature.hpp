#pragma once

#include "imstab/field.hpp"

namespace imstab {

enum class NormKind { Linf, L1, W1s, W21 };

// Cell-midpoint quadrature: every cell whose four corners lie in the mask
// (and are valid) contributes cell_area times the mean of its corner values.
// Exact for nodewise-linear integrands; O(h^2) for smooth ones.
Complex integrate(const GridField& f, const NodeMask& mask);

// Area of the masked region under the same cell rule.
double mask_area(const Grid& grid, const NodeMask& mask);

// Graded norms over a masked region. W1s and W21 use central differences;
// derivative terms lose the outermost valid layer, the |beta|=0 term does not.
// W1s requires s > 2 (the space dimension).
double norm(const GridField& f, NormKind kind, const NodeMask& mask, double s = 0.0);

double norm_linf(const GridField& f, const NodeMask& mask);

}  // namespace imstab
