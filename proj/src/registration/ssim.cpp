#include "cardiokey/registration/ssim.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace cardiokey {

namespace {

struct SliceLayout {
  std::size_t slices = 1;
  std::size_t ny = 1;
  std::size_t nx = 1;
};

SliceLayout layout_of(const Shape& shape) {
  switch (shape.rank()) {
    case 1: return {1, 1, shape[0]};
    case 2: return {1, shape[0], shape[1]};
    default: return {shape[0], shape[1], shape[2]};
  }
}

// Sums over every wy x wx window fully inside an ny x nx slice.
// dst has (ny - wy + 1) x (nx - wx + 1) entries.
void box_sum(const double* src, std::size_t ny, std::size_t nx, std::size_t wy, std::size_t wx,
             std::vector<double>& rows, double* dst) {
  const std::size_t ox = nx - wx + 1;
  const std::size_t oy = ny - wy + 1;
  rows.resize(ny * ox);
  for (std::size_t y = 0; y < ny; ++y) {
    const double* in = src + y * nx;
    double* out = rows.data() + y * ox;
    for (std::size_t x = 0; x < ox; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < wx; ++k) s += in[x + k];
      out[x] = s;
    }
  }
  for (std::size_t y = 0; y < oy; ++y) {
    double* out = dst + y * ox;
    for (std::size_t x = 0; x < ox; ++x) out[x] = 0.0;
    for (std::size_t k = 0; k < wy; ++k) {
      const double* in = rows.data() + (y + k) * ox;
      for (std::size_t x = 0; x < ox; ++x) out[x] += in[x];
    }
  }
}

// Adjoint of box_sum: scatters every window value back onto its pixels.
void box_scatter(const double* src, std::size_t ny, std::size_t nx, std::size_t wy, std::size_t wx,
                 std::vector<double>& rows, double* dst) {
  const std::size_t ox = nx - wx + 1;
  const std::size_t oy = ny - wy + 1;
  rows.assign(ny * ox, 0.0);
  for (std::size_t y = 0; y < oy; ++y) {
    const double* in = src + y * ox;
    for (std::size_t k = 0; k < wy; ++k) {
      double* out = rows.data() + (y + k) * ox;
      for (std::size_t x = 0; x < ox; ++x) out[x] += in[x];
    }
  }
  for (std::size_t y = 0; y < ny; ++y) {
    const double* in = rows.data() + y * ox;
    double* out = dst + y * nx;
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t lo = x + 1 >= wx ? x + 1 - wx : 0;
      const std::size_t hi = std::min(x, ox - 1);
      double s = 0.0;
      for (std::size_t o = lo; o <= hi; ++o) s += in[o];
      out[x] = s;
    }
  }
}

double ssim_impl(const ScalarGrid& a, const ScalarGrid& b, int window, double range, double* d_b) {
  if (!(a.shape() == b.shape())) throw std::invalid_argument("ssim: grids differ in shape");
  if (window < 1) throw std::invalid_argument("ssim: window must be >= 1");
  if (!(range > 0.0)) throw std::invalid_argument("ssim: range must be positive");

  const SliceLayout geo = layout_of(a.shape());
  const std::size_t wy = std::min<std::size_t>(static_cast<std::size_t>(window), geo.ny);
  const std::size_t wx = std::min<std::size_t>(static_cast<std::size_t>(window), geo.nx);
  const std::size_t oy = geo.ny - wy + 1;
  const std::size_t ox = geo.nx - wx + 1;
  const std::size_t n_win = oy * ox;
  const std::size_t plane = geo.ny * geo.nx;
  const double inv_n = 1.0 / static_cast<double>(wy * wx);
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  // Every window of every slice carries the same weight in the mean.
  const double win_weight = 1.0 / static_cast<double>(n_win * geo.slices);

  std::vector<double> prod(plane);
  std::vector<double> rows;
  std::vector<double> sa(n_win), sb(n_win), saa(n_win), sbb(n_win), sab(n_win);
  std::vector<double> k0, k1, k2, g0, g1, g2;
  if (d_b != nullptr) {
    k0.resize(n_win);
    k1.resize(n_win);
    k2.resize(n_win);
    g0.resize(plane);
    g1.resize(plane);
    g2.resize(plane);
  }

  double total = 0.0;
  for (std::size_t s = 0; s < geo.slices; ++s) {
    const double* pa = a.values().data() + s * plane;
    const double* pb = b.values().data() + s * plane;
    box_sum(pa, geo.ny, geo.nx, wy, wx, rows, sa.data());
    box_sum(pb, geo.ny, geo.nx, wy, wx, rows, sb.data());
    for (std::size_t i = 0; i < plane; ++i) prod[i] = pa[i] * pa[i];
    box_sum(prod.data(), geo.ny, geo.nx, wy, wx, rows, saa.data());
    for (std::size_t i = 0; i < plane; ++i) prod[i] = pb[i] * pb[i];
    box_sum(prod.data(), geo.ny, geo.nx, wy, wx, rows, sbb.data());
    for (std::size_t i = 0; i < plane; ++i) prod[i] = pa[i] * pb[i];
    box_sum(prod.data(), geo.ny, geo.nx, wy, wx, rows, sab.data());

    double slice_sum = 0.0;
    for (std::size_t w = 0; w < n_win; ++w) {
      const double mu_a = sa[w] * inv_n;
      const double mu_b = sb[w] * inv_n;
      const double var_a = saa[w] * inv_n - mu_a * mu_a;
      const double var_b = sbb[w] * inv_n - mu_b * mu_b;
      const double cov = sab[w] * inv_n - mu_a * mu_b;
      const double num_l = 2.0 * (mu_a * mu_b) + c1;
      const double num_s = 2.0 * cov + c2;
      const double den_l = mu_a * mu_a + mu_b * mu_b + c1;
      const double den_s = var_a + var_b + c2;
      const double value = (num_l * num_s) / (den_l * den_s);
      slice_sum += value;
      if (d_b != nullptr) {
        // dS/db_p = (1/N) [dS/dmu_b + beta (a_p - mu_a) + 2 gamma (b_p - mu_b)]
        const double d_mu = 2.0 * mu_a * num_s / (den_l * den_s) - 2.0 * mu_b * value / den_l;
        const double beta = 2.0 * num_l / (den_l * den_s);
        const double gamma2 = -2.0 * value / den_s;
        const double scale = inv_n * win_weight;
        k0[w] = (d_mu - beta * mu_a - gamma2 * mu_b) * scale;
        k1[w] = beta * scale;
        k2[w] = gamma2 * scale;
      }
    }
    total += slice_sum / static_cast<double>(n_win);

    if (d_b != nullptr) {
      box_scatter(k0.data(), geo.ny, geo.nx, wy, wx, rows, g0.data());
      box_scatter(k1.data(), geo.ny, geo.nx, wy, wx, rows, g1.data());
      box_scatter(k2.data(), geo.ny, geo.nx, wy, wx, rows, g2.data());
      double* out = d_b + s * plane;
      for (std::size_t i = 0; i < plane; ++i) out[i] = g0[i] + pa[i] * g1[i] + pb[i] * g2[i];
    }
  }
  return total / static_cast<double>(geo.slices);
}

}  // namespace

double ssim(const ScalarGrid& a, const ScalarGrid& b, int window, double range) {
  return ssim_impl(a, b, window, range, nullptr);
}

double ssim_with_gradient(const ScalarGrid& a, const ScalarGrid& b, int window, double range,
                          std::span<double> d_b) {
  if (d_b.size() != b.size()) throw std::invalid_argument("ssim: gradient buffer has the wrong size");
  return ssim_impl(a, b, window, range, d_b.data());
}

}  // namespace cardiokey
