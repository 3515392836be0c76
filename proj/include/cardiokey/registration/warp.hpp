#pragma once

#include "cardiokey/core/grid.hpp"

namespace cardiokey {

/// Pull warp: out(x) = moving(x + field(x)), multilinear with clamp-to-edge.
ScalarGrid warp(const ScalarGrid& moving, const VectorGrid& field);

/// warp() that also stores the spatial gradient of `moving` at every
/// sampled position in `gradient` (same shape as the field).
ScalarGrid warp_with_gradient(const ScalarGrid& moving, const VectorGrid& field, VectorGrid& gradient);

}  // namespace cardiokey
