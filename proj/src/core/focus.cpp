#include "cardiokey/core/focus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cardiokey {

std::string_view to_string(FocusKind kind) {
  switch (kind) {
    case FocusKind::mse: return "mse";
    case FocusKind::vol: return "vol";
    case FocusKind::lv: return "lv";
    case FocusKind::sept: return "sept";
    case FocusKind::explicit_point: return "explicit";
  }
  return "explicit";
}

FocusKind focus_kind_from_string(std::string_view name) {
  if (name == "mse") return FocusKind::mse;
  if (name == "vol") return FocusKind::vol;
  if (name == "lv") return FocusKind::lv;
  if (name == "sept") return FocusKind::sept;
  if (name == "explicit") return FocusKind::explicit_point;
  throw std::invalid_argument("unknown focus kind '" + std::string(name) + "'");
}

FocusPoint focus_vol(const Shape& shape) {
  FocusPoint p;
  p.kind = FocusKind::vol;
  for (std::size_t n : shape.dims()) p.coords.push_back((static_cast<double>(n) - 1.0) / 2.0);
  return p;
}

bool focus_inside(const FocusPoint& focus, const Shape& shape) {
  if (focus.coords.size() != shape.rank()) return false;
  for (std::size_t axis = 0; axis < shape.rank(); ++axis) {
    const double c = focus.coords[axis];
    if (!std::isfinite(c) || c < 0.0 || c > static_cast<double>(shape[axis]) - 1.0) return false;
  }
  return true;
}

FocusPoint focus_explicit(std::vector<double> coords, const Shape& shape, FocusKind kind) {
  FocusPoint p{std::move(coords), kind};
  if (p.coords.size() != shape.rank()) {
    throw std::invalid_argument("focus point needs one coordinate per grid axis");
  }
  if (!focus_inside(p, shape)) throw std::invalid_argument("focus point lies outside the grid");
  return p;
}

}  // namespace cardiokey
