#include "cardiokey/core/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace cardiokey {

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > kMaxRank) {
    throw std::invalid_argument("grid rank must be 1, 2 or 3");
  }
  size_ = 1;
  for (std::size_t axis = dims_.size(); axis-- > 0;) {
    if (dims_[axis] == 0) throw std::invalid_argument("grid extent must be positive");
    strides_[axis] = size_;
    size_ *= dims_[axis];
  }
}

std::size_t Shape::linear(std::span<const std::size_t> index) const {
  std::size_t out = 0;
  for (std::size_t axis = 0; axis < rank(); ++axis) out += index[axis] * strides_[axis];
  return out;
}

void Shape::unravel(std::size_t linear_index, std::span<std::size_t> index) const {
  for (std::size_t axis = 0; axis < rank(); ++axis) {
    index[axis] = linear_index / strides_[axis];
    linear_index %= strides_[axis];
  }
}

ScalarGrid::ScalarGrid(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_.size(), fill) {}

ScalarGrid::ScalarGrid(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw std::invalid_argument("grid value count does not match its shape");
  }
}

bool ScalarGrid::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

VectorGrid::VectorGrid(Shape shape) : shape_(std::move(shape)) {
  components_.assign(shape_.rank(), ScalarGrid(shape_));
}

double VectorGrid::norm_at(std::size_t i) const {
  double sq = 0.0;
  for (const auto& c : components_) sq += c[i] * c[i];
  return std::sqrt(sq);
}

bool VectorGrid::all_finite() const noexcept {
  for (const auto& c : components_) {
    if (!c.all_finite()) return false;
  }
  return true;
}

VectorGrid VectorGrid::scaled(double s) const {
  VectorGrid out = *this;
  for (auto& c : out.components_) {
    for (double& v : c.values()) v *= s;
  }
  return out;
}

}  // namespace cardiokey
