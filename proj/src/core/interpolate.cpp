#include "cardiokey/core/interpolate.hpp"

#include <cmath>
#include <stdexcept>

namespace cardiokey {

namespace {

struct AxisCell {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
  bool clamped = false;
};

AxisCell locate(double p, std::size_t n) {
  AxisCell cell;
  if (n == 1) {
    cell.clamped = true;
    return cell;
  }
  const double top = static_cast<double>(n - 1);
  if (!(p >= 0.0)) {
    cell.clamped = true;
    p = 0.0;
  } else if (p > top) {
    cell.clamped = true;
    p = top;
  }
  auto i0 = static_cast<std::size_t>(std::floor(p));
  if (i0 >= n - 1) i0 = n - 2;
  cell.lo = i0;
  cell.hi = i0 + 1;
  cell.frac = p - static_cast<double>(i0);
  return cell;
}

template <bool WithGradient>
double interpolate(const ScalarGrid& grid, std::span<const double> pos, std::span<double> gradient) {
  const Shape& shape = grid.shape();
  const std::size_t rank = shape.rank();
  if (pos.size() < rank) throw std::invalid_argument("sample position has too few coordinates");

  std::array<AxisCell, kMaxRank> cells;
  for (std::size_t a = 0; a < rank; ++a) cells[a] = locate(pos[a], shape[a]);

  double value = 0.0;
  std::array<double, kMaxRank> grad{};
  const std::size_t corners = std::size_t{1} << rank;
  for (std::size_t corner = 0; corner < corners; ++corner) {
    std::size_t offset = 0;
    double weight = 1.0;
    // Per-axis weights, kept for the gradient products.
    std::array<double, kMaxRank> w{};
    std::array<double, kMaxRank> dw{};
    for (std::size_t a = 0; a < rank; ++a) {
      const bool upper = (corner >> (rank - 1 - a)) & 1U;
      const AxisCell& c = cells[a];
      offset += (upper ? c.hi : c.lo) * shape.stride(a);
      w[a] = upper ? c.frac : 1.0 - c.frac;
      dw[a] = upper ? 1.0 : -1.0;
      weight *= w[a];
    }
    const double v = grid[offset];
    value += weight * v;
    if constexpr (WithGradient) {
      for (std::size_t a = 0; a < rank; ++a) {
        if (cells[a].clamped) continue;
        double partial = dw[a];
        for (std::size_t b = 0; b < rank; ++b) {
          if (b != a) partial *= w[b];
        }
        grad[a] += partial * v;
      }
    }
  }
  if constexpr (WithGradient) {
    for (std::size_t a = 0; a < rank; ++a) gradient[a] = grad[a];
  }
  return value;
}

}  // namespace

double sample(const ScalarGrid& grid, std::span<const double> pos) {
  return interpolate<false>(grid, pos, {});
}

double sample_with_gradient(const ScalarGrid& grid, std::span<const double> pos,
                            std::span<double> gradient) {
  if (gradient.size() < grid.shape().rank()) {
    throw std::invalid_argument("gradient buffer has too few entries");
  }
  return interpolate<true>(grid, pos, gradient);
}

ScalarGrid resample(const ScalarGrid& grid, std::span<const double> spacing_mm,
                    std::span<const double> target_spacing_mm) {
  const Shape& in = grid.shape();
  const std::size_t rank = in.rank();
  if (spacing_mm.size() != rank || target_spacing_mm.size() != rank) {
    throw std::invalid_argument("spacing must have one entry per axis");
  }
  std::vector<std::size_t> dims(rank);
  std::array<double, kMaxRank> ratio{};
  for (std::size_t a = 0; a < rank; ++a) {
    if (!(spacing_mm[a] > 0.0) || !(target_spacing_mm[a] > 0.0)) {
      throw std::invalid_argument("spacing must be positive");
    }
    ratio[a] = target_spacing_mm[a] / spacing_mm[a];
    const double extent = std::round(static_cast<double>(in[a]) * spacing_mm[a] / target_spacing_mm[a]);
    dims[a] = std::max<std::size_t>(1, static_cast<std::size_t>(extent));
  }
  ScalarGrid out{Shape(dims)};
  std::array<std::size_t, kMaxRank> idx{};
  std::array<double, kMaxRank> pos{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.shape().unravel(i, std::span(idx.data(), rank));
    for (std::size_t a = 0; a < rank; ++a) pos[a] = static_cast<double>(idx[a]) * ratio[a];
    out[i] = sample(grid, std::span<const double>(pos.data(), rank));
  }
  return out;
}

ImageSequence resample(const ImageSequence& seq, std::span<const double> target_spacing_mm) {
  std::vector<ScalarGrid> frames;
  frames.reserve(seq.length());
  for (const auto& f : seq.frames()) frames.push_back(resample(f, seq.spacing(), target_spacing_mm));
  return {std::move(frames), std::vector<double>(target_spacing_mm.begin(), target_spacing_mm.end())};
}

}  // namespace cardiokey
