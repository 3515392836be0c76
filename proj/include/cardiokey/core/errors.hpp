#pragma once

#include <stdexcept>
#include <string>

namespace cardiokey {

/// Raised when the combined descriptor mask selects no grid point.
class DegenerateMaskError : public std::runtime_error {
 public:
  DegenerateMaskError(std::string filter, const std::string& what)
      : std::runtime_error(what), filter_(std::move(filter)) {}

  /// "magnitude", "direction-change" or "combined".
  const std::string& filter() const noexcept { return filter_; }

 private:
  std::string filter_;
};

/// Raised when the registration loss stops being finite.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int iteration, int frame = -1)
      : std::runtime_error(what), iteration_(iteration), frame_(frame) {}

  int iteration() const noexcept { return iteration_; }
  /// Frame index of the failing pair, -1 for a standalone pair.
  int frame() const noexcept { return frame_; }

 private:
  int iteration_;
  int frame_;
};

}  // namespace cardiokey
