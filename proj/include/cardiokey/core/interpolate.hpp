#pragma once

#include <span>
#include <vector>

#include "cardiokey/core/grid.hpp"
#include "cardiokey/core/sequence.hpp"

namespace cardiokey {

/// Multilinear interpolation of `grid` at the fractional index `pos`
/// (bilinear in 2D, trilinear in 3D). Positions outside the grid clamp to
/// the nearest boundary.
double sample(const ScalarGrid& grid, std::span<const double> pos);

/// Same as sample() and writes d(value)/d(pos) into `gradient`. Clamped
/// axes have zero derivative.
double sample_with_gradient(const ScalarGrid& grid, std::span<const double> pos,
                            std::span<double> gradient);

/// Linear resampling so that output index j sits at physical position
/// j * target_spacing. Output extent is round(dims * spacing / target).
ScalarGrid resample(const ScalarGrid& grid, std::span<const double> spacing_mm,
                    std::span<const double> target_spacing_mm);

ImageSequence resample(const ImageSequence& seq, std::span<const double> target_spacing_mm);

}  // namespace cardiokey
