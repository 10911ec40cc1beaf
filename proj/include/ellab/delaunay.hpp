#pragma once

#include <vector>

#include "ellab/types.hpp"

namespace ellab {

// Bowyer-Watson Delaunay triangulation of a planar point set. Returns CCW
// triangles covering the convex hull of the points. Near-cocircular ties are
// broken toward keeping the existing triangulation, so the result is a valid
// triangulation that is Delaunay up to a relative tolerance.
TriMatrix delaunay_triangulate(const std::vector<Vec2>& points);

}  // namespace ellab
