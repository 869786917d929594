#pragma once

#include <array>
#include <vector>

#include "vishape/common.hpp"

namespace vishape::detail {

// Incremental Bowyer-Watson Delaunay triangulation. Input points must be
// pairwise distinct; returns CCW triangles indexing into `points`.
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points);

}  // namespace vishape::detail
