#include "cardiokey/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cardiokey {

namespace {

struct Bump {
  double centre;  // fraction of the cycle
  double width;   // fraction of the cycle
  double amplitude;
};

double wrapped_gaussian(double phase, const Bump& b) {
  double d = phase - b.centre;
  d -= std::round(d);
  return std::exp(-0.5 * d * d / (b.width * b.width));
}

std::vector<Bump> diastolic_bumps(ScheduleProfile profile) {
  switch (profile) {
    case ScheduleProfile::normal: return {{0.48, 0.07, 1.0}, {0.80, 0.06, 0.55}};
    case ScheduleProfile::no_md_peak: return {{0.52, 0.12, 1.0}};
    case ScheduleProfile::weak_relaxation: return {{0.50, 0.10, 0.45}, {0.80, 0.07, 0.3}};
  }
  return {};
}

constexpr Bump kSystole{0.20, 0.09, 1.0};

double smooth_step(double u, double edge) { return 0.5 * (1.0 + std::tanh(u / edge)); }

// Nearest frame to the zero between t and t+1.
std::size_t crossing_frame(const std::vector<double>& a, std::size_t t) {
  const std::size_t n = a.size();
  const double lo = a[t];
  const double hi = a[(t + 1) % n];
  return lo / (lo - hi) >= 0.5 ? (t + 1) % n : t;
}

}  // namespace

std::string_view to_string(ScheduleProfile profile) {
  switch (profile) {
    case ScheduleProfile::normal: return "normal";
    case ScheduleProfile::no_md_peak: return "no_md_peak";
    case ScheduleProfile::weak_relaxation: return "weak_relaxation";
  }
  return "normal";
}

ScheduleProfile schedule_profile_from_string(std::string_view name) {
  for (auto p : {ScheduleProfile::normal, ScheduleProfile::no_md_peak, ScheduleProfile::weak_relaxation}) {
    if (to_string(p) == name) return p;
  }
  throw std::invalid_argument("unknown phantom profile '" + std::string(name) + "'");
}

std::vector<double> default_schedule(std::size_t frames, ScheduleProfile profile) {
  if (frames < 10) throw std::invalid_argument("phantom schedules need at least 10 frames");
  const auto bumps = diastolic_bumps(profile);
  std::vector<double> positive(frames, 0.0);
  std::vector<double> negative(frames, 0.0);
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double phase = static_cast<double>(t) / static_cast<double>(frames);
    for (const auto& b : bumps) positive[t] += b.amplitude * wrapped_gaussian(phase, b);
    negative[t] = wrapped_gaussian(phase, kSystole);
    pos_sum += positive[t];
    neg_sum += negative[t];
  }
  const double systole = pos_sum / neg_sum;
  std::vector<double> a(frames);
  for (std::size_t t = 0; t < frames; ++t) a[t] = positive[t] - systole * negative[t];

  double excursion = 0.0;
  for (double v : a) excursion += v < 0.0 ? -v : 0.0;
  double mean = 0.0;
  for (double& v : a) {
    v /= excursion;
    mean += v;
  }
  // Remove the rounding residue so the cycle closes.
  mean /= static_cast<double>(frames);
  for (double& v : a) v -= mean;
  return a;
}

KeyframeSet schedule_keyframes(const std::vector<double>& a) {
  const std::size_t n = a.size();
  KeyframeSet ks;
  ks.length = n;
  std::optional<std::size_t> rise;
  std::optional<std::size_t> fall;
  for (std::size_t t = 0; t < n; ++t) {
    const double lo = a[t];
    const double hi = a[(t + 1) % n];
    if (lo < 0.0 && hi >= 0.0) rise = t;
    if (lo >= 0.0 && hi < 0.0) fall = t;
  }
  if (!rise || !fall) return ks;

  const auto ms = static_cast<std::size_t>(std::min_element(a.begin(), a.end()) - a.begin());
  const auto pf = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  ks[Keyframe::ms] = {ms, KeyframeStatus::detected};
  ks[Keyframe::es] = {crossing_frame(a, *rise), KeyframeStatus::detected};
  ks[Keyframe::pf] = {pf, KeyframeStatus::detected};
  ks[Keyframe::ed] = {crossing_frame(a, *fall), KeyframeStatus::detected};

  // Secondary peaks between PF and the falling sign change.
  std::optional<std::size_t> md;
  for (std::size_t t = (pf + 1) % n; t != (*fall + 1) % n; t = (t + 1) % n) {
    const double v = a[t];
    if (v > a[(t + n - 1) % n] && v >= a[(t + 1) % n]) md = t;
  }
  ks[Keyframe::md] = md ? KeyframeEntry{*md, KeyframeStatus::detected} : KeyframeEntry{pf, KeyframeStatus::fallback};
  return ks;
}

void PhantomSpec::validate() const {
  if (dims.rank() != 2 && dims.rank() != 3) throw std::invalid_argument("phantom dims must be 2D or 3D");
  if (schedule.size() < 2) throw std::invalid_argument("phantom schedule needs at least 2 frames");
  if (center.size() != dims.rank()) throw std::invalid_argument("phantom centre needs one entry per axis");
  for (double v : schedule) {
    if (!std::isfinite(v)) throw std::invalid_argument("phantom schedule must be finite");
  }
  std::size_t negative_runs = 0;
  const std::size_t n = schedule.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (schedule[t] < 0.0 && !(schedule[(t + n - 1) % n] < 0.0)) ++negative_runs;
  }
  if (negative_runs > 1) throw std::invalid_argument("phantom schedule must hold one contiguous negative run");
  if (!(ring_radius > 0.0) || !(ring_width > 0.0)) throw std::invalid_argument("ring radius and width must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  if (texture_lobes < 1) throw std::invalid_argument("texture_lobes must be >= 1");
}

std::vector<double> phantom_spacing(std::size_t rank) {
  return std::vector<double>(rank, rank == 3 ? 2.5 : 1.0);
}

PhantomSpec make_phantom_spec(ScheduleProfile profile, std::size_t frames, const Shape& dims, std::uint64_t seed,
                              double noise_sigma) {
  PhantomSpec spec;
  spec.dims = dims;
  if (dims.rank() != 2 && dims.rank() != 3) throw std::invalid_argument("phantom dims must be 2D or 3D");
  for (std::size_t n : dims.dims()) spec.center.push_back((static_cast<double>(n) - 1.0) / 2.0);
  const std::size_t r = dims.rank();
  const double in_plane = static_cast<double>(std::min(dims[r - 2], dims[r - 1]));
  spec.ring_radius = 0.28 * in_plane;
  spec.ring_width = 0.11 * in_plane;
  spec.schedule = default_schedule(frames, profile);
  const double excursion = 0.3 * spec.ring_radius;
  for (double& v : spec.schedule) v *= excursion;
  spec.texture_lobes = 8;
  spec.twist = 2.0 * std::numbers::pi / spec.texture_lobes;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  spec.truth = schedule_keyframes(spec.schedule);
  return spec;
}

Phantom generate(const PhantomSpec& spec) {
  spec.validate();
  const Shape& shape = spec.dims;
  const std::size_t rank = shape.rank();
  const std::size_t frames = spec.frames();
  const double cz = rank == 3 ? spec.center[0] : 0.0;
  const double cy = spec.center[rank - 2];
  const double cx = spec.center[rank - 1];
  const double half_z = rank == 3 ? std::max(cz, 1.0) : 1.0;
  const double omega = spec.twist / static_cast<double>(frames);
  const double edge = 1.0;
  const double pool_level = 0.35;
  const double ring_level = 0.75;
  const double support_width = 1.5 * spec.ring_width;

  // Ring radius at the start of each frame.
  std::vector<double> radius(frames + 1, spec.ring_radius);
  for (std::size_t t = 0; t < frames; ++t) radius[t + 1] = radius[t] + spec.schedule[t];

  std::vector<ScalarGrid> images;
  std::vector<VectorGrid> fields;
  std::array<std::size_t, kMaxRank> idx{};
  for (std::size_t t = 0; t < frames; ++t) {
    ScalarGrid image(shape);
    VectorGrid field(shape);
    const double angle = omega * static_cast<double>(t);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      shape.unravel(i, std::span(idx.data(), rank));
      const double dz = rank == 3 ? static_cast<double>(idx[0]) - cz : 0.0;
      const double ry = static_cast<double>(idx[rank - 2]) - cy;
      const double rx = static_cast<double>(idx[rank - 1]) - cx;
      const double taper = 1.0 - 0.25 * (dz / half_z) * (dz / half_z);
      const double rho = std::hypot(ry, rx);
      const double r_mid = radius[t] * taper;
      const double r_in = r_mid - spec.ring_width / 2.0;
      const double r_out = r_mid + spec.ring_width / 2.0;
      const double theta = std::atan2(ry, rx);
      const double texture = 1.0 + spec.texture_depth * std::cos(spec.texture_lobes * (theta - angle));
      image[i] = pool_level * smooth_step(r_in - rho, edge) +
                 ring_level * texture * smooth_step(rho - r_in, edge) * smooth_step(r_out - rho, edge);

      const double rate = spec.schedule[t] * taper;
      const double centre = r_mid + rate / 2.0;
      double w = std::exp(-0.5 * (rho - centre) * (rho - centre) / (support_width * support_width));
      if (w < 1e-6 || rho == 0.0) w = 0.0;
      // Pull field: radial a(t) (C - x) / |C - x| in-plane, plus the
      // backward rotation of the texture.
      const double vy = w * (rate * (-ry / (rho > 0.0 ? rho : 1.0)) - omega * rx);
      const double vx = w * (rate * (-rx / (rho > 0.0 ? rho : 1.0)) + omega * ry);
      field.component(rank - 2)[i] = vy;
      field.component(rank - 1)[i] = vx;
    }
    images.push_back(std::move(image));
    fields.push_back(std::move(field));
  }

  if (spec.noise_sigma > 0.0) {
    double lo = images.front()[0];
    double hi = lo;
    for (const auto& im : images) {
      const auto [a, b] = std::minmax_element(im.values().begin(), im.values().end());
      lo = std::min(lo, *a);
      hi = std::max(hi, *b);
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma * (hi - lo));
    for (auto& im : images) {
      for (double& v : im.values()) v += noise(rng);
    }
  }

  const auto spacing = phantom_spacing(rank);
  return {ImageSequence(std::move(images), spacing), DisplacementFieldSequence(std::move(fields), spacing),
          spec.truth};
}

}  // namespace cardiokey
