#include "cardiokey/registration/register.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cardiokey/core/errors.hpp"
#include "cardiokey/core/interpolate.hpp"
#include "cardiokey/core/parallel.hpp"
#include "cardiokey/registration/smoothness.hpp"
#include "cardiokey/registration/ssim.hpp"
#include "cardiokey/registration/warp.hpp"

namespace cardiokey {

namespace {

// Axes shorter than this are not halved further.
constexpr std::size_t kMinHalvableExtent = 16;
// Line search gives up below this fraction of the configured step.
constexpr double kMinStepFraction = 1e-3;

using Factors = std::array<std::size_t, kMaxRank>;

Factors halving_factors(const Shape& shape) {
  Factors f{1, 1, 1};
  for (std::size_t a = 0; a < shape.rank(); ++a) f[a] = shape[a] >= kMinHalvableExtent ? 2 : 1;
  return f;
}

Shape reduced_shape(const Shape& shape, const Factors& f) {
  std::vector<std::size_t> dims(shape.rank());
  for (std::size_t a = 0; a < shape.rank(); ++a) dims[a] = (shape[a] + f[a] - 1) / f[a];
  return Shape(dims);
}

// Block mean over f-sized blocks; blocks running past the edge reuse the
// last row.
ScalarGrid block_mean(const ScalarGrid& grid, const Factors& f) {
  const Shape& in = grid.shape();
  const std::size_t rank = in.rank();
  ScalarGrid out(reduced_shape(in, f));
  std::array<std::size_t, kMaxRank> idx{};
  std::array<std::size_t, kMaxRank> src{};
  std::size_t taps = 1;
  for (std::size_t a = 0; a < rank; ++a) taps *= f[a];
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.shape().unravel(i, std::span(idx.data(), rank));
    double sum = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      std::size_t rem = t;
      for (std::size_t a = rank; a-- > 0;) {
        const std::size_t off = rem % f[a];
        rem /= f[a];
        src[a] = std::min(idx[a] * f[a] + off, in[a] - 1);
      }
      sum += grid[in.linear(std::span<const std::size_t>(src.data(), rank))];
    }
    out[i] = sum / static_cast<double>(taps);
  }
  return out;
}

VectorGrid restrict_field(const VectorGrid& field, const Factors& f) {
  VectorGrid out(reduced_shape(field.shape(), f));
  for (std::size_t a = 0; a < field.rank(); ++a) {
    out.component(a) = block_mean(field.component(a), f);
    for (double& v : out.component(a).values()) v /= static_cast<double>(f[a]);
  }
  return out;
}

// Coarse block j covers fine samples [f j, f j + f - 1]; its centre sits at
// fine coordinate f j + (f - 1) / 2.
VectorGrid prolong_field(const VectorGrid& coarse, const Shape& fine, const Factors& f) {
  const std::size_t rank = fine.rank();
  VectorGrid out(fine);
  std::array<std::size_t, kMaxRank> idx{};
  std::array<double, kMaxRank> pos{};
  for (std::size_t i = 0; i < fine.size(); ++i) {
    fine.unravel(i, std::span(idx.data(), rank));
    for (std::size_t a = 0; a < rank; ++a) {
      const double fa = static_cast<double>(f[a]);
      pos[a] = (static_cast<double>(idx[a]) - (fa - 1.0) / 2.0) / fa;
    }
    const std::span<const double> p(pos.data(), rank);
    for (std::size_t a = 0; a < rank; ++a) {
      out.component(a)[i] = sample(coarse.component(a), p) * static_cast<double>(f[a]);
    }
  }
  return out;
}

// One pyramid level of the pair problem with reusable buffers.
class PairObjective {
 public:
  PairObjective(const ScalarGrid& moving, const ScalarGrid& fixed, const RegistrationConfig& cfg,
                double range)
      : moving_(moving), fixed_(fixed), cfg_(cfg), range_(range), image_grad_(moving.shape()),
        d_moved_(moving.size()) {}

  double loss(const VectorGrid& field) const {
    const ScalarGrid moved = warp(moving_, field);
    return (1.0 - ssim(fixed_, moved, cfg_.ssim_window, range_)) + cfg_.lambda_smooth * smoothness(field);
  }

  double loss_and_gradient(const VectorGrid& field, VectorGrid& grad) {
    const ScalarGrid moved = warp_with_gradient(moving_, field, image_grad_);
    const double s = ssim_with_gradient(fixed_, moved, cfg_.ssim_window, range_, d_moved_);
    if (!(grad.shape() == field.shape())) grad = VectorGrid(field.shape());
    for (std::size_t a = 0; a < field.rank(); ++a) {
      auto g = grad.component(a).values();
      const auto ig = image_grad_.component(a).values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -d_moved_[i] * ig[i];
    }
    add_smoothness_gradient(field, cfg_.lambda_smooth, grad);
    return (1.0 - s) + cfg_.lambda_smooth * smoothness(field);
  }

 private:
  const ScalarGrid& moving_;
  const ScalarGrid& fixed_;
  const RegistrationConfig& cfg_;
  double range_;
  VectorGrid image_grad_;
  std::vector<double> d_moved_;
};

double max_abs(const VectorGrid& g) {
  double m = 0.0;
  for (std::size_t a = 0; a < g.rank(); ++a) {
    for (double v : g.component(a).values()) m = std::max(m, std::abs(v));
  }
  return m;
}

void optimise_level(PairObjective& objective, VectorGrid& field, const RegistrationConfig& cfg, int level,
                    std::vector<LossRecord>& trace) {
  VectorGrid grad(field.shape());
  VectorGrid trial(field.shape());
  double loss = objective.loss_and_gradient(field, grad);
  if (!std::isfinite(loss)) throw NumericalFailure("registration loss is not finite", 0);
  trace.push_back({level, 0, loss});

  const double min_step = cfg.step_size * kMinStepFraction;
  double step = cfg.step_size;
  for (int it = 1; it <= cfg.iterations_per_level; ++it) {
    const double g_max = max_abs(grad);
    if (!std::isfinite(g_max)) throw NumericalFailure("registration gradient is not finite", it);
    if (g_max < 1e-14) break;

    // Backtracking on the max-norm normalised descent direction.
    bool accepted = false;
    double trial_loss = loss;
    while (step >= min_step) {
      const double scale = step / g_max;
      for (std::size_t a = 0; a < field.rank(); ++a) {
        const auto f = field.component(a).values();
        const auto g = grad.component(a).values();
        auto t = trial.component(a).values();
        for (std::size_t i = 0; i < f.size(); ++i) t[i] = f[i] - scale * g[i];
      }
      trial_loss = objective.loss(trial);
      if (!std::isfinite(trial_loss)) throw NumericalFailure("registration loss is not finite", it);
      if (trial_loss < loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::swap(field, trial);
    const double change = (loss - trial_loss) / std::max(std::abs(loss), 1e-12);
    loss = objective.loss_and_gradient(field, grad);
    trace.push_back({level, it, loss});
    step = std::min(step * 2.0, cfg.step_size);
    if (change < cfg.convergence_tol) break;
  }
}

}  // namespace

double pair_intensity_range(const ScalarGrid& moving, const ScalarGrid& fixed) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const ScalarGrid* g : {&moving, &fixed}) {
    for (double v : g->values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return hi > lo ? hi - lo : 1.0;
}

double registration_loss(const ScalarGrid& moving, const ScalarGrid& fixed, const VectorGrid& field,
                         const RegistrationConfig& cfg, double range) {
  const ScalarGrid moved = warp(moving, field);
  return (1.0 - ssim(fixed, moved, cfg.ssim_window, range)) + cfg.lambda_smooth * smoothness(field);
}

RegistrationResult register_pair(const ScalarGrid& moving, const ScalarGrid& fixed,
                                 const RegistrationConfig& cfg, const std::optional<VectorGrid>& init) {
  cfg.validate();
  if (!(moving.shape() == fixed.shape())) {
    throw std::invalid_argument("register_pair: moving and fixed differ in shape");
  }
  if (init && !(init->shape() == fixed.shape())) {
    throw std::invalid_argument("register_pair: initial field has the wrong shape");
  }
  const double range = pair_intensity_range(moving, fixed);

  // Level 0 is the input resolution.
  std::vector<ScalarGrid> movings{moving};
  std::vector<ScalarGrid> fixeds{fixed};
  std::vector<Factors> factors;
  for (int level = 1; level < cfg.pyramid_levels; ++level) {
    const Factors f = halving_factors(fixeds.back().shape());
    if (f == Factors{1, 1, 1}) break;
    factors.push_back(f);
    movings.push_back(block_mean(movings.back(), f));
    fixeds.push_back(block_mean(fixeds.back(), f));
  }
  const int coarsest = static_cast<int>(movings.size()) - 1;

  VectorGrid field = init ? *init : VectorGrid(fixed.shape());
  for (int level = 0; level < coarsest; ++level) field = restrict_field(field, factors[level]);

  RegistrationResult result;
  for (int level = coarsest; level >= 0; --level) {
    PairObjective objective(movings[level], fixeds[level], cfg, range);
    optimise_level(objective, field, cfg, level, result.loss_trace);
    if (level > 0) field = prolong_field(field, movings[level - 1].shape(), factors[level - 1]);
  }
  result.final_loss = registration_loss(moving, fixed, field, cfg, range);
  result.moved = warp(moving, field);
  result.field = std::move(field);
  return result;
}

SequenceRegistration register_sequence(const ImageSequence& seq, const RegistrationConfig& cfg) {
  cfg.validate();
  const std::size_t n = seq.length();
  std::vector<RegistrationResult> results(n);
  auto run = [&](std::size_t t, const std::optional<VectorGrid>& init) {
    try {
      results[t] = register_pair(seq.frame(t), seq.frame((t + 1) % n), cfg, init);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string(e.what()) + " (frame " + std::to_string(t) + ")", e.iteration(),
                             static_cast<int>(t));
    }
  };
  if (cfg.warm_start) {
    std::optional<VectorGrid> init;
    for (std::size_t t = 0; t < n; ++t) {
      run(t, init);
      init = results[t].field;
    }
  } else {
    parallel_for(n, cfg.threads, [&](std::size_t t) { run(t, std::nullopt); });
  }

  SequenceRegistration out{DisplacementFieldSequence(
                               [&] {
                                 std::vector<VectorGrid> fields;
                                 fields.reserve(n);
                                 for (auto& r : results) fields.push_back(std::move(r.field));
                                 return fields;
                               }(),
                               seq.spacing()),
                           {}};
  out.loss_traces.reserve(n);
  for (auto& r : results) out.loss_traces.push_back(std::move(r.loss_trace));
  return out;
}

}  // namespace cardiokey
