#pragma once

#include <vector>

#include "imstab/field.hpp"

namespace imstab {

struct Segment {
  Point a;
  Point b;
};

double segment_length(const Segment& s);

// Marching squares with linear interpolation on cells whose four corners are
// masked and valid. `f` must be real-valued.
std::vector<Segment> extract_level_segments(const GridField& f, double level,
                                            const NodeMask& mask);

// Total polyline length of {f = level} inside the masked region.
double level_measure(const GridField& f, double level, const NodeMask& mask);

}  // namespace imstab
