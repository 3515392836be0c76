#include "cardiokey/core/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cardiokey {

std::string_view to_string(View view) { return view == View::sax ? "sax" : "fourch"; }

View view_from_string(std::string_view name) {
  if (name == "sax") return View::sax;
  if (name == "fourch" || name == "4ch") return View::fourch;
  throw std::invalid_argument("unknown view '" + std::string(name) + "'");
}

double default_target_spacing_mm(View view) { return view == View::sax ? 2.5 : 1.0; }

DescriptorConfig DescriptorConfig::for_view(View view) {
  DescriptorConfig cfg;
  cfg.t_norm_percentile = 50.0;
  cfg.t_delta_alpha = view == View::sax ? 0.8 : 1.2;
  cfg.gaussian_sigma = 2.0;
  return cfg;
}

void DescriptorConfig::validate() const {
  if (!(t_norm_percentile >= 0.0 && t_norm_percentile <= 100.0)) {
    throw std::invalid_argument("t_norm_percentile must lie in [0, 100]");
  }
  if (!(t_delta_alpha >= 0.0 && t_delta_alpha <= 2.0)) {
    throw std::invalid_argument("t_delta_alpha must lie in [0, 2]");
  }
  if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma)) {
    throw std::invalid_argument("gaussian_sigma must be non-negative");
  }
  const bool needs_coords = focus_kind == FocusKind::lv || focus_kind == FocusKind::sept ||
                            focus_kind == FocusKind::explicit_point;
  if (needs_coords && !explicit_focus) {
    throw std::invalid_argument("explicit_focus is required for focus kind " +
                                std::string(to_string(focus_kind)));
  }
}

void RegistrationConfig::validate() const {
  if (!(lambda_smooth >= 0.0) || !std::isfinite(lambda_smooth)) {
    throw std::invalid_argument("lambda_smooth must be non-negative");
  }
  if (pyramid_levels < 1) throw std::invalid_argument("pyramid_levels must be >= 1");
  if (iterations_per_level < 0) throw std::invalid_argument("iterations_per_level must be >= 0");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw std::invalid_argument("step_size must be positive");
  }
  if (ssim_window < 3 || ssim_window % 2 == 0) {
    throw std::invalid_argument("ssim_window must be odd and >= 3");
  }
  if (!(convergence_tol >= 0.0)) throw std::invalid_argument("convergence_tol must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

}  // namespace cardiokey
