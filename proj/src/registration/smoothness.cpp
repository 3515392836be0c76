#include "cardiokey/registration/smoothness.hpp"

#include <stdexcept>

namespace cardiokey {

namespace {

// Visits every forward difference along every axis. `weight` is 2 for the
// last difference of a line (it also stands in for the boundary point).
template <typename Visit>
void for_each_difference(const Shape& shape, Visit&& visit) {
  const std::size_t rank = shape.rank();
  for (std::size_t axis = 0; axis < rank; ++axis) {
    const std::size_t n = shape[axis];
    if (n < 2) continue;
    const std::size_t stride = shape.stride(axis);
    const std::size_t outer = shape.size() / (n * stride);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = o * n * stride + inner;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const double weight = (i + 2 == n) ? 2.0 : 1.0;
          visit(base + i * stride, base + (i + 1) * stride, weight);
        }
      }
    }
  }
}

}  // namespace

double smoothness(const VectorGrid& field) {
  double total = 0.0;
  for (std::size_t c = 0; c < field.rank(); ++c) {
    const auto v = field.component(c).values();
    for_each_difference(field.shape(), [&](std::size_t lo, std::size_t hi, double weight) {
      const double d = v[hi] - v[lo];
      total += weight * d * d;
    });
  }
  return total;
}

void add_smoothness_gradient(const VectorGrid& field, double weight, VectorGrid& out) {
  if (!(out.shape() == field.shape())) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t c = 0; c < field.rank(); ++c) {
    const auto v = field.component(c).values();
    auto g = out.component(c).values();
    for_each_difference(field.shape(), [&](std::size_t lo, std::size_t hi, double w) {
      const double d = 2.0 * weight * w * (v[hi] - v[lo]);
      g[hi] += d;
      g[lo] -= d;
    });
  }
}

}  // namespace cardiokey
