#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "cardiokey/core/focus.hpp"

namespace cardiokey {

/// Acquisition view. Short-axis stacks are 3D, four-chamber slices 2D.
enum class View { sax, fourch };

std::string_view to_string(View view);
View view_from_string(std::string_view name);

/// Isotropic target spacing the sequence is resampled to before registration.
double default_target_spacing_mm(View view);

struct DescriptorConfig {
  double t_norm_percentile = 50.0;
  double t_delta_alpha = 0.8;
  double gaussian_sigma = 2.0;
  FocusKind focus_kind = FocusKind::mse;
  std::optional<std::vector<double>> explicit_focus;

  static DescriptorConfig for_view(View view);
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct RegistrationConfig {
  double lambda_smooth = 0.001;
  int pyramid_levels = 3;
  int iterations_per_level = 100;
  /// Largest trial update per iteration, in grid units of the current level.
  double step_size = 1.0;
  int ssim_window = 7;
  double convergence_tol = 1e-5;
  // Off by default: flat regions keep the previous pair's motion.
  bool warm_start = false;
  /// Worker cap; results never depend on it.
  int threads = 1;

  void validate() const;
};

}  // namespace cardiokey
