#pragma once

#include "cardiokey/core/grid.hpp"

namespace cardiokey {

/// Diffusion penalty: sum over grid points of the squared Frobenius norm of
/// the field's Jacobian. Forward differences; the last difference along each
/// axis is replicated onto the boundary point.
double smoothness(const VectorGrid& field);

/// Adds `weight` times the gradient of smoothness() into `out`.
void add_smoothness_gradient(const VectorGrid& field, double weight, VectorGrid& out);

}  // namespace cardiokey
