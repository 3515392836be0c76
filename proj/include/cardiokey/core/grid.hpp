#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace cardiokey {

inline constexpr std::size_t kMaxRank = 3;

/// Extent of a dense grid. Axes are ordered slowest first: (z,) y, x.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  /// Element stride along `axis` in a row-major buffer.
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  std::size_t linear(std::span<const std::size_t> index) const;
  /// Inverse of linear(); writes rank() entries.
  void unravel(std::size_t linear_index, std::span<std::size_t> index) const;

  bool operator==(const Shape& other) const noexcept { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::array<std::size_t, kMaxRank> strides_{};
  std::size_t size_ = 0;
};

/// Dense scalar grid stored row-major.
class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(Shape shape, double fill = 0.0);
  ScalarGrid(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Dense field holding one rank()-vector per grid point, one buffer per
/// component. Component k is the displacement along axis k in grid units.
class VectorGrid {
 public:
  VectorGrid() = default;
  explicit VectorGrid(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.rank(); }

  const ScalarGrid& component(std::size_t axis) const { return components_[axis]; }
  ScalarGrid& component(std::size_t axis) { return components_[axis]; }

  double norm_at(std::size_t i) const;
  bool all_finite() const noexcept;

  VectorGrid scaled(double s) const;

 private:
  Shape shape_;
  std::vector<ScalarGrid> components_;
};

}  // namespace cardiokey
