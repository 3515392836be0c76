#pragma once

#include <vector>

#include "cardiokey/core/config.hpp"
#include "cardiokey/core/focus.hpp"
#include "cardiokey/core/sequence.hpp"

namespace cardiokey {

/// Per-frame grids of the direction cosine alpha_i(t).
using DirectionFields = std::vector<ScalarGrid>;

/// Binary selection over grid points.
using Mask = std::vector<bool>;

struct MotionDescriptor {
  std::vector<double> alpha;      // smoothed, in [-1, 1]
  std::vector<double> alpha_raw;  // masked mean before smoothing
  std::vector<double> magnitude;  // masked mean |phi_t|
  std::vector<double> magnitude_normalized;  // min-max over the cycle
  Mask mask;
  Shape shape;
  FocusPoint focus;
  DescriptorConfig config;

  std::size_t active_points() const;
};

/// alpha_i(t) = cos(phi_t(x_i), C - x_i). Pull fields point from where
/// tissue is at t+1 back to where it was at t, so contraction towards C
/// yields alpha < 0. Points with |phi| at most 1e-8 times the longest vector of
/// the sequence, or x_i == C, give 0.
/// Throws std::invalid_argument when the focus lies outside the grid.
DirectionFields direction_field(const DisplacementFieldSequence& fields, const FocusPoint& focus);

/// Threshold used by magnitude_mask: nearest-rank percentile of `values`
/// (rank = ceil(p / 100 * N), at least 1).
double nearest_rank_percentile(std::vector<double> values, double percentile);

/// Time-averaged |phi| per grid point. The per-point sum runs over the
/// sorted magnitudes, so the result does not depend on frame order.
std::vector<double> mean_magnitude(const DisplacementFieldSequence& fields);

/// Points whose time-averaged magnitude reaches the nearest-rank percentile
/// (within 1e-12 relative, so rounding-level ties are kept).
Mask magnitude_mask(const DisplacementFieldSequence& fields, double t_norm_percentile);

/// Points whose direction range max_t alpha - min_t alpha is >= threshold.
Mask direction_change_mask(const DirectionFields& alpha_fields, double t_delta_alpha);

/// Cyclic Gaussian smoothing with the kernel truncated at +-ceil(4 sigma) and
/// renormalised; sigma == 0 returns the input.
std::vector<double> cyclic_gaussian_smooth(const std::vector<double>& signal, double sigma);

/// Descriptor for an explicitly given focus point (config.focus_kind is
/// ignored). Throws DegenerateMaskError naming the filter that emptied the
/// mask.
MotionDescriptor compute_descriptor(const DisplacementFieldSequence& fields, const DescriptorConfig& config,
                                    const FocusPoint& focus);

/// Resolves the focus from config.focus_kind (mse, vol or the explicit
/// coordinates) and computes the descriptor.
MotionDescriptor compute_descriptor(const DisplacementFieldSequence& fields, const DescriptorConfig& config);

/// Centre of mass of the combined mask, bootstrapped from the grid centre
/// and refined once with the focus it produced.
FocusPoint focus_mse(const DisplacementFieldSequence& fields, const DescriptorConfig& config);

/// Unweighted centre of mass of the active points. Throws
/// DegenerateMaskError on an empty mask.
std::vector<double> mask_center_of_mass(const Mask& mask, const Shape& shape);

}  // namespace cardiokey
