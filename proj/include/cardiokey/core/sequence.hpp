#pragma once

#include <utility>
#include <vector>

#include "cardiokey/core/grid.hpp"

namespace cardiokey {

/// T frames of a cine acquisition sharing one grid and spacing.
class ImageSequence {
 public:
  /// Throws std::invalid_argument on T < 2, rank outside {2,3}, mismatched
  /// frames, non-positive spacing or non-finite intensities.
  ImageSequence(std::vector<ScalarGrid> frames, std::vector<double> spacing_mm);

  std::size_t length() const noexcept { return frames_.size(); }
  const Shape& shape() const { return frames_.front().shape(); }
  const ScalarGrid& frame(std::size_t t) const { return frames_[t]; }
  const std::vector<ScalarGrid>& frames() const noexcept { return frames_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  std::pair<double, double> intensity_range() const noexcept { return range_; }

 private:
  std::vector<ScalarGrid> frames_;
  std::vector<double> spacing_;
  std::pair<double, double> range_;
};

/// One field per frame; field t maps frame t onto frame (t + 1) mod T.
class DisplacementFieldSequence {
 public:
  DisplacementFieldSequence(std::vector<VectorGrid> fields, std::vector<double> spacing_mm);

  std::size_t length() const noexcept { return fields_.size(); }
  const Shape& shape() const { return fields_.front().shape(); }
  const VectorGrid& field(std::size_t t) const { return fields_[t]; }
  const std::vector<VectorGrid>& fields() const noexcept { return fields_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }

  DisplacementFieldSequence scaled(double s) const;
  /// Sequence whose frame t is this sequence's frame (t - k) mod T.
  DisplacementFieldSequence rotated(std::size_t k) const;

 private:
  std::vector<VectorGrid> fields_;
  std::vector<double> spacing_;
};

}  // namespace cardiokey
