#pragma once

#include <span>

#include "cardiokey/core/grid.hpp"

namespace cardiokey {

/// Mean structural similarity over every fully contained window of edge
/// `window` (clipped to the grid), with C1 = (0.01 range)^2 and
/// C2 = (0.03 range)^2. 3D grids are scored as the mean of their 2D
/// z-slice values. Throws std::invalid_argument on shape mismatch,
/// window < 1 or range <= 0.
double ssim(const ScalarGrid& a, const ScalarGrid& b, int window, double range);

/// ssim() plus its derivative with respect to every value of `b`.
double ssim_with_gradient(const ScalarGrid& a, const ScalarGrid& b, int window, double range,
                          std::span<double> d_b);

}  // namespace cardiokey
