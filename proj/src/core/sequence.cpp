#include "cardiokey/core/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cardiokey {

namespace {

void check_spacing(const std::vector<double>& spacing, const Shape& shape) {
  if (spacing.size() != shape.rank()) {
    throw std::invalid_argument("spacing must have one entry per spatial axis");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("spacing must be positive");
  }
}

}  // namespace

ImageSequence::ImageSequence(std::vector<ScalarGrid> frames, std::vector<double> spacing_mm)
    : frames_(std::move(frames)), spacing_(std::move(spacing_mm)) {
  if (frames_.size() < 2) throw std::invalid_argument("an image sequence needs at least 2 frames");
  const Shape& shape = frames_.front().shape();
  if (shape.rank() != 2 && shape.rank() != 3) {
    throw std::invalid_argument("image frames must be 2D or 3D");
  }
  check_spacing(spacing_, shape);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& f : frames_) {
    if (!(f.shape() == shape)) throw std::invalid_argument("all frames must share one shape");
    for (double v : f.values()) {
      if (!std::isfinite(v)) throw std::invalid_argument("image intensities must be finite");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  range_ = {lo, hi};
}

DisplacementFieldSequence::DisplacementFieldSequence(std::vector<VectorGrid> fields,
                                                     std::vector<double> spacing_mm)
    : fields_(std::move(fields)), spacing_(std::move(spacing_mm)) {
  if (fields_.empty()) throw std::invalid_argument("a field sequence needs at least one field");
  const Shape& shape = fields_.front().shape();
  check_spacing(spacing_, shape);
  for (const auto& f : fields_) {
    if (!(f.shape() == shape)) throw std::invalid_argument("all fields must share one shape");
    if (!f.all_finite()) throw std::invalid_argument("displacement components must be finite");
  }
}

DisplacementFieldSequence DisplacementFieldSequence::scaled(double s) const {
  std::vector<VectorGrid> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.scaled(s));
  return {std::move(out), spacing_};
}

DisplacementFieldSequence DisplacementFieldSequence::rotated(std::size_t k) const {
  const std::size_t n = fields_.size();
  std::vector<VectorGrid> out(n);
  for (std::size_t t = 0; t < n; ++t) out[(t + k) % n] = fields_[t];
  return {std::move(out), spacing_};
}

}  // namespace cardiokey
