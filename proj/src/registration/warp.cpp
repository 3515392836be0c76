#include "cardiokey/registration/warp.hpp"

#include <cmath>
#include <stdexcept>

#include "cardiokey/core/interpolate.hpp"

namespace cardiokey {

namespace {

struct Cell {
  std::size_t lo;
  std::size_t hi;
  double frac;
  bool clamped;
};

inline Cell locate(double p, std::size_t n) {
  if (n == 1) return {0, 0, 0.0, true};
  const double top = static_cast<double>(n - 1);
  bool clamped = false;
  if (!(p >= 0.0)) {
    p = 0.0;
    clamped = true;
  } else if (p > top) {
    p = top;
    clamped = true;
  }
  auto i0 = static_cast<std::size_t>(p);
  if (i0 >= n - 1) i0 = n - 2;
  return {i0, i0 + 1, p - static_cast<double>(i0), clamped};
}

// Weighted form: exact at t = 0 and t = 1.
inline double lerp(double a, double b, double t) { return (1.0 - t) * a + t * b; }

template <bool WithGradient>
void warp_2d(const ScalarGrid& moving, const VectorGrid& field, ScalarGrid& out, VectorGrid* grad) {
  const std::size_t ny = moving.shape()[0];
  const std::size_t nx = moving.shape()[1];
  const auto m = moving.values();
  const auto fy = field.component(0).values();
  const auto fx = field.component(1).values();
  auto o = out.values();
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t i = y * nx + x;
      const Cell cy = locate(static_cast<double>(y) + fy[i], ny);
      const Cell cx = locate(static_cast<double>(x) + fx[i], nx);
      const double v00 = m[cy.lo * nx + cx.lo];
      const double v01 = m[cy.lo * nx + cx.hi];
      const double v10 = m[cy.hi * nx + cx.lo];
      const double v11 = m[cy.hi * nx + cx.hi];
      const double top = lerp(v00, v01, cx.frac);
      const double bottom = lerp(v10, v11, cx.frac);
      o[i] = lerp(top, bottom, cy.frac);
      if constexpr (WithGradient) {
        grad->component(0)[i] = cy.clamped ? 0.0 : bottom - top;
        const double dx_top = v01 - v00;
        const double dx_bottom = v11 - v10;
        grad->component(1)[i] = cx.clamped ? 0.0 : dx_top + cy.frac * (dx_bottom - dx_top);
      }
    }
  }
}

template <bool WithGradient>
void warp_3d(const ScalarGrid& moving, const VectorGrid& field, ScalarGrid& out, VectorGrid* grad) {
  const std::size_t nz = moving.shape()[0];
  const std::size_t ny = moving.shape()[1];
  const std::size_t nx = moving.shape()[2];
  const auto m = moving.values();
  const auto fz = field.component(0).values();
  const auto fy = field.component(1).values();
  const auto fx = field.component(2).values();
  auto o = out.values();
  auto at = [&](std::size_t z, std::size_t y, std::size_t x) { return m[(z * ny + y) * nx + x]; };
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t i = (z * ny + y) * nx + x;
        const Cell cz = locate(static_cast<double>(z) + fz[i], nz);
        const Cell cy = locate(static_cast<double>(y) + fy[i], ny);
        const Cell cx = locate(static_cast<double>(x) + fx[i], nx);
        const double v000 = at(cz.lo, cy.lo, cx.lo), v001 = at(cz.lo, cy.lo, cx.hi);
        const double v010 = at(cz.lo, cy.hi, cx.lo), v011 = at(cz.lo, cy.hi, cx.hi);
        const double v100 = at(cz.hi, cy.lo, cx.lo), v101 = at(cz.hi, cy.lo, cx.hi);
        const double v110 = at(cz.hi, cy.hi, cx.lo), v111 = at(cz.hi, cy.hi, cx.hi);
        const double tx = cx.frac, ty = cy.frac, tz = cz.frac;
        const double c00 = lerp(v000, v001, tx);
        const double c01 = lerp(v010, v011, tx);
        const double c10 = lerp(v100, v101, tx);
        const double c11 = lerp(v110, v111, tx);
        const double c0 = lerp(c00, c01, ty);
        const double c1 = lerp(c10, c11, ty);
        o[i] = lerp(c0, c1, tz);
        if constexpr (WithGradient) {
          grad->component(0)[i] = cz.clamped ? 0.0 : c1 - c0;
          const double dy0 = c01 - c00;
          const double dy1 = c11 - c10;
          grad->component(1)[i] = cy.clamped ? 0.0 : dy0 + tz * (dy1 - dy0);
          const double dx00 = v001 - v000, dx01 = v011 - v010;
          const double dx10 = v101 - v100, dx11 = v111 - v110;
          const double dx0 = dx00 + ty * (dx01 - dx00);
          const double dx1 = dx10 + ty * (dx11 - dx10);
          grad->component(2)[i] = cx.clamped ? 0.0 : dx0 + tz * (dx1 - dx0);
        }
      }
    }
  }
}

void warp_generic(const ScalarGrid& moving, const VectorGrid& field, ScalarGrid& out, VectorGrid* grad) {
  const Shape& shape = moving.shape();
  const std::size_t rank = shape.rank();
  std::array<std::size_t, kMaxRank> idx{};
  std::array<double, kMaxRank> pos{};
  std::array<double, kMaxRank> g{};
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape.unravel(i, std::span(idx.data(), rank));
    for (std::size_t a = 0; a < rank; ++a) pos[a] = static_cast<double>(idx[a]) + field.component(a)[i];
    const std::span<const double> p(pos.data(), rank);
    if (grad != nullptr) {
      out[i] = sample_with_gradient(moving, p, std::span(g.data(), rank));
      for (std::size_t a = 0; a < rank; ++a) grad->component(a)[i] = g[a];
    } else {
      out[i] = sample(moving, p);
    }
  }
}

void check(const ScalarGrid& moving, const VectorGrid& field) {
  if (!(moving.shape() == field.shape())) throw std::invalid_argument("warp: field and image shapes differ");
}

}  // namespace

ScalarGrid warp(const ScalarGrid& moving, const VectorGrid& field) {
  check(moving, field);
  ScalarGrid out(moving.shape());
  switch (moving.shape().rank()) {
    case 2: warp_2d<false>(moving, field, out, nullptr); break;
    case 3: warp_3d<false>(moving, field, out, nullptr); break;
    default: warp_generic(moving, field, out, nullptr); break;
  }
  return out;
}

ScalarGrid warp_with_gradient(const ScalarGrid& moving, const VectorGrid& field, VectorGrid& gradient) {
  check(moving, field);
  if (!(gradient.shape() == field.shape())) gradient = VectorGrid(field.shape());
  ScalarGrid out(moving.shape());
  switch (moving.shape().rank()) {
    case 2: warp_2d<true>(moving, field, out, &gradient); break;
    case 3: warp_3d<true>(moving, field, out, &gradient); break;
    default: warp_generic(moving, field, out, &gradient); break;
  }
  return out;
}

}  // namespace cardiokey
