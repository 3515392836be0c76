#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cardiokey/core/grid.hpp"

namespace cardiokey {

enum class FocusKind { mse, vol, lv, sept, explicit_point };

std::string_view to_string(FocusKind kind);
/// Throws std::invalid_argument for unknown names.
FocusKind focus_kind_from_string(std::string_view name);

/// Reference location the motion direction is measured against, in grid
/// index units (fractional positions allowed).
struct FocusPoint {
  std::vector<double> coords;
  FocusKind kind = FocusKind::vol;
};

/// Centre of the grid: (dims - 1) / 2 per axis.
FocusPoint focus_vol(const Shape& shape);

/// Wraps externally supplied coordinates. Bounds are inclusive:
/// 0 <= c_k <= dims_k - 1. Throws std::invalid_argument otherwise.
FocusPoint focus_explicit(std::vector<double> coords, const Shape& shape,
                          FocusKind kind = FocusKind::explicit_point);

bool focus_inside(const FocusPoint& focus, const Shape& shape);

}  // namespace cardiokey
