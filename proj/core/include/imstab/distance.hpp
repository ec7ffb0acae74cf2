#pragma once

#include "imstab/field.hpp"

namespace imstab {

// Exact Euclidean distance from every node to the nearest masked node,
// two-pass parabolic transform (anisotropic spacing supported). An empty
// mask yields +infinity everywhere.
GridField distance_field(const NodeMask& mask, std::shared_ptr<const Grid> grid);

// Reference O(N*M) scan, used as the oracle in tests.
GridField distance_field_bruteforce(const NodeMask& mask, std::shared_ptr<const Grid> grid);

}  // namespace imstab
