#include "cardiokey/descriptor/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cardiokey/core/errors.hpp"

namespace cardiokey {

namespace {

// Vectors shorter than this fraction of the longest one count as no motion.
constexpr double kZeroMotion = 1e-8;

Mask combine(const Mask& a, const Mask& b) {
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

bool any(const Mask& m) { return std::find(m.begin(), m.end(), true) != m.end(); }

struct CombinedMask {
  DirectionFields alpha;
  Mask mask;
};

CombinedMask build_mask(const DisplacementFieldSequence& fields, const DescriptorConfig& config,
                        const FocusPoint& focus) {
  CombinedMask out;
  out.alpha = direction_field(fields, focus);
  const Mask by_magnitude = magnitude_mask(fields, config.t_norm_percentile);
  if (!any(by_magnitude)) {
    throw DegenerateMaskError("magnitude", "degenerate mask: the magnitude filter retained no point");
  }
  const Mask by_direction = direction_change_mask(out.alpha, config.t_delta_alpha);
  if (!any(by_direction)) {
    throw DegenerateMaskError("direction-change",
                              "degenerate mask: the direction-change filter retained no point");
  }
  out.mask = combine(by_magnitude, by_direction);
  if (!any(out.mask)) {
    throw DegenerateMaskError("combined",
                              "degenerate mask: magnitude and direction-change filters do not overlap");
  }
  return out;
}

}  // namespace

std::size_t MotionDescriptor::active_points() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

DirectionFields direction_field(const DisplacementFieldSequence& fields, const FocusPoint& focus) {
  const Shape& shape = fields.shape();
  if (!focus_inside(focus, shape)) throw std::invalid_argument("focus point lies outside the grid");
  const std::size_t rank = shape.rank();

  // Reference vectors w_i = C - x_i and their norms, shared by all frames.
  std::vector<double> ref(shape.size() * rank);
  std::vector<double> ref_norm(shape.size());
  std::array<std::size_t, kMaxRank> idx{};
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape.unravel(i, std::span(idx.data(), rank));
    double sq = 0.0;
    for (std::size_t a = 0; a < rank; ++a) {
      const double w = focus.coords[a] - static_cast<double>(idx[a]);
      ref[i * rank + a] = w;
      sq += w * w;
    }
    ref_norm[i] = std::sqrt(sq);
  }

  // Relative cut-off, so scaling every field leaves alpha unchanged.
  double longest = 0.0;
  for (const auto& field : fields.fields()) {
    for (std::size_t i = 0; i < shape.size(); ++i) longest = std::max(longest, field.norm_at(i));
  }
  const double cutoff = kZeroMotion * longest;

  DirectionFields out;
  out.reserve(fields.length());
  for (const auto& field : fields.fields()) {
    ScalarGrid alpha(shape);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      double dot = 0.0;
      double sq = 0.0;
      for (std::size_t a = 0; a < rank; ++a) {
        const double v = field.component(a)[i];
        dot += v * ref[i * rank + a];
        sq += v * v;
      }
      const double v_norm = std::sqrt(sq);
      if (v_norm <= cutoff || ref_norm[i] == 0.0) continue;
      alpha[i] = std::clamp(dot / (v_norm * ref_norm[i]), -1.0, 1.0);
    }
    out.push_back(std::move(alpha));
  }
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(percentile >= 0.0 && percentile <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<double> mean_magnitude(const DisplacementFieldSequence& fields) {
  const std::size_t n = fields.shape().size();
  const std::size_t frames = fields.length();
  std::vector<double> out(n);
  std::vector<double> per_frame(frames);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < frames; ++t) per_frame[t] = fields.field(t).norm_at(i);
    std::sort(per_frame.begin(), per_frame.end());
    double sum = 0.0;
    for (double v : per_frame) sum += v;
    out[i] = sum / static_cast<double>(frames);
  }
  return out;
}

Mask magnitude_mask(const DisplacementFieldSequence& fields, double t_norm_percentile) {
  const std::vector<double> avg = mean_magnitude(fields);
  // Values within rounding of the threshold count as ties, so the selection
  // survives rescaling of the fields.
  const double threshold = nearest_rank_percentile(avg, t_norm_percentile);
  const double cut = threshold - 1e-12 * threshold;
  Mask out(avg.size());
  for (std::size_t i = 0; i < avg.size(); ++i) out[i] = avg[i] >= cut;
  return out;
}

Mask direction_change_mask(const DirectionFields& alpha_fields, double t_delta_alpha) {
  if (!(t_delta_alpha >= 0.0 && t_delta_alpha <= 2.0)) {
    throw std::invalid_argument("t_delta_alpha must lie in [0, 2]");
  }
  if (alpha_fields.empty()) return {};
  const std::size_t n = alpha_fields.front().size();
  Mask out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = alpha_fields.front()[i];
    double hi = lo;
    for (const auto& a : alpha_fields) {
      lo = std::min(lo, a[i]);
      hi = std::max(hi, a[i]);
    }
    out[i] = hi - lo >= t_delta_alpha;
  }
  return out;
}

std::vector<double> cyclic_gaussian_smooth(const std::vector<double>& signal, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  if (sigma == 0.0 || signal.empty()) return signal;
  const auto radius = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[k + radius] = w;
    norm += w;
  }
  for (double& w : kernel) w /= norm;

  const auto n = static_cast<long>(signal.size());
  const auto [lo_it, hi_it] = std::minmax_element(signal.begin(), signal.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(signal.size());
  for (long t = 0; t < n; ++t) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      const long j = ((t + k) % n + n) % n;
      acc += kernel[k + radius] * signal[j];
    }
    // A convex combination; the clamp only removes rounding overshoot.
    out[t] = std::clamp(acc, lo, hi);
  }
  return out;
}

std::vector<double> mask_center_of_mass(const Mask& mask, const Shape& shape) {
  const std::size_t rank = shape.rank();
  std::vector<double> sum(rank, 0.0);
  std::size_t count = 0;
  std::array<std::size_t, kMaxRank> idx{};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    shape.unravel(i, std::span(idx.data(), rank));
    for (std::size_t a = 0; a < rank; ++a) sum[a] += static_cast<double>(idx[a]);
    ++count;
  }
  if (count == 0) throw DegenerateMaskError("combined", "degenerate mask: no point to average");
  for (double& s : sum) s /= static_cast<double>(count);
  return sum;
}

MotionDescriptor compute_descriptor(const DisplacementFieldSequence& fields, const DescriptorConfig& config,
                                    const FocusPoint& focus) {
  config.validate();
  const Shape& shape = fields.shape();
  CombinedMask combined = build_mask(fields, config, focus);

  MotionDescriptor d;
  d.shape = shape;
  d.focus = focus;
  d.config = config;
  const std::size_t frames = fields.length();
  const auto active = static_cast<double>(std::count(combined.mask.begin(), combined.mask.end(), true));
  d.alpha_raw.resize(frames);
  d.magnitude.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double alpha_sum = 0.0;
    double mag_sum = 0.0;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (!combined.mask[i]) continue;
      alpha_sum += combined.alpha[t][i];
      mag_sum += fields.field(t).norm_at(i);
    }
    d.alpha_raw[t] = std::clamp(alpha_sum / active, -1.0, 1.0);
    d.magnitude[t] = mag_sum / active;
  }
  d.alpha = cyclic_gaussian_smooth(d.alpha_raw, config.gaussian_sigma);

  const auto [lo_it, hi_it] = std::minmax_element(d.magnitude.begin(), d.magnitude.end());
  const double span = *hi_it - *lo_it;
  d.magnitude_normalized.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    d.magnitude_normalized[t] = span > 0.0 ? (d.magnitude[t] - *lo_it) / span : 0.0;
  }
  d.mask = std::move(combined.mask);
  return d;
}

FocusPoint focus_mse(const DisplacementFieldSequence& fields, const DescriptorConfig& config) {
  config.validate();
  FocusPoint focus = focus_vol(fields.shape());
  for (int pass = 0; pass < 2; ++pass) {
    const CombinedMask combined = build_mask(fields, config, focus);
    focus.coords = mask_center_of_mass(combined.mask, fields.shape());
  }
  focus.kind = FocusKind::mse;
  return focus;
}

MotionDescriptor compute_descriptor(const DisplacementFieldSequence& fields, const DescriptorConfig& config) {
  config.validate();
  FocusPoint focus;
  switch (config.focus_kind) {
    case FocusKind::mse: focus = focus_mse(fields, config); break;
    case FocusKind::vol: focus = focus_vol(fields.shape()); break;
    default: focus = focus_explicit(*config.explicit_focus, fields.shape(), config.focus_kind); break;
  }
  return compute_descriptor(fields, config, focus);
}

}  // namespace cardiokey
