#include "cardiokey/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace cardiokey::cli {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text, const std::string& field) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(field, fmt::format("{}: '{}' is not a number", field, text));
  }
  return value;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError(prefix, fmt::format("{}: expected an object", prefix));
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      const auto name = prefix.empty() ? key : prefix + "." + key;
      throw ConfigError(name, fmt::format("{}: unknown configuration key", name));
    }
  }
}

double get_number(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name, fmt::format("{}: expected a number", name));
  return v.get<double>();
}

int get_int(const json& v, const std::string& name) {
  if (!v.is_number_integer()) throw ConfigError(name, fmt::format("{}: expected an integer", name));
  return v.get<int>();
}

void apply_registration(const json& obj, RegistrationConfig& r) {
  reject_unknown(obj, {"lambda_smooth", "pyramid_levels", "iterations_per_level", "step_size", "ssim_window",
                       "convergence_tol", "warm_start"},
                 "registration");
  const std::string p = "registration.";
  if (obj.contains("lambda_smooth")) r.lambda_smooth = get_number(obj["lambda_smooth"], p + "lambda_smooth");
  if (obj.contains("pyramid_levels")) r.pyramid_levels = get_int(obj["pyramid_levels"], p + "pyramid_levels");
  if (obj.contains("iterations_per_level")) {
    r.iterations_per_level = get_int(obj["iterations_per_level"], p + "iterations_per_level");
  }
  if (obj.contains("step_size")) r.step_size = get_number(obj["step_size"], p + "step_size");
  if (obj.contains("ssim_window")) r.ssim_window = get_int(obj["ssim_window"], p + "ssim_window");
  if (obj.contains("convergence_tol")) r.convergence_tol = get_number(obj["convergence_tol"], p + "convergence_tol");
  if (obj.contains("warm_start")) {
    if (!obj["warm_start"].is_boolean()) throw ConfigError(p + "warm_start", "registration.warm_start: expected a boolean");
    r.warm_start = obj["warm_start"].get<bool>();
  }
}

void apply_descriptor(const json& obj, RunConfig& cfg) {
  reject_unknown(obj, {"t_norm_percentile", "t_delta_alpha", "gaussian_sigma", "focus"}, "descriptor");
  auto& d = cfg.descriptor;
  const std::string p = "descriptor.";
  if (obj.contains("t_norm_percentile")) d.t_norm_percentile = get_number(obj["t_norm_percentile"], p + "t_norm_percentile");
  if (obj.contains("t_delta_alpha")) d.t_delta_alpha = get_number(obj["t_delta_alpha"], p + "t_delta_alpha");
  if (obj.contains("gaussian_sigma")) d.gaussian_sigma = get_number(obj["gaussian_sigma"], p + "gaussian_sigma");
  if (obj.contains("focus")) {
    if (!obj["focus"].is_string()) throw ConfigError(p + "focus", "descriptor.focus: expected a string");
    cfg.focus = parse_focus(obj["focus"].get<std::string>());
  }
}

void apply_file(const json& file, RunConfig& cfg) {
  reject_unknown(file, {"view", "target_spacing_mm", "seed", "threads", "registration", "descriptor"}, "");
  if (file.contains("target_spacing_mm")) {
    const auto& v = file["target_spacing_mm"];
    cfg.target_spacing_mm.clear();
    if (v.is_number()) {
      cfg.target_spacing_mm.push_back(v.get<double>());
    } else if (v.is_array()) {
      for (const auto& e : v) cfg.target_spacing_mm.push_back(get_number(e, "target_spacing_mm"));
    } else {
      throw ConfigError("target_spacing_mm", "target_spacing_mm: expected a number or an array");
    }
  }
  if (file.contains("seed")) {
    if (!file["seed"].is_number_integer() || file["seed"].get<std::int64_t>() < 0) throw ConfigError("seed", "seed: expected a non-negative integer");
    cfg.seed = file["seed"].get<std::uint64_t>();
  }
  if (file.contains("threads")) cfg.threads = get_int(file["threads"], "threads");
  if (file.contains("registration")) apply_registration(file["registration"], cfg.registration);
  if (file.contains("descriptor")) apply_descriptor(file["descriptor"], cfg);
}

}  // namespace

FocusSelection parse_focus(std::string_view text) {
  FocusSelection sel;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  try {
    sel.kind = focus_kind_from_string(name);
  } catch (const std::invalid_argument&) {
    throw ConfigError("focus", fmt::format("focus: unknown kind '{}'", name));
  }
  const bool needs_coords = sel.kind != FocusKind::mse && sel.kind != FocusKind::vol;
  if (!needs_coords) {
    if (colon != std::string_view::npos) {
      throw ConfigError("focus", fmt::format("focus: '{}' takes no coordinates", name));
    }
    return sel;
  }
  if (colon == std::string_view::npos) {
    throw ConfigError("focus", fmt::format("focus: '{}' needs coordinates X,Y[,Z]", name));
  }
  for (auto part : split(text.substr(colon + 1), ',')) sel.coords_xyz.push_back(parse_double(part, "focus"));
  if (sel.coords_xyz.size() < 2 || sel.coords_xyz.size() > 3) {
    throw ConfigError("focus", "focus: expected 2 or 3 coordinates");
  }
  return sel;
}

std::string to_string(const FocusSelection& focus) {
  std::string out(cardiokey::to_string(focus.kind));
  for (std::size_t i = 0; i < focus.coords_xyz.size(); ++i) {
    out += fmt::format("{}{}", i == 0 ? ':' : ',', focus.coords_xyz[i]);
  }
  return out;
}

RunConfig RunConfig::for_view(View view) {
  RunConfig cfg;
  cfg.view = view;
  cfg.descriptor = DescriptorConfig::for_view(view);
  return cfg;
}

std::vector<double> RunConfig::target_spacing(std::size_t rank) const {
  if (target_spacing_mm.empty()) return std::vector<double>(rank, default_target_spacing_mm(view));
  if (target_spacing_mm.size() == 1) return std::vector<double>(rank, target_spacing_mm.front());
  if (target_spacing_mm.size() != rank) {
    throw ConfigError("target_spacing_mm",
                      fmt::format("target_spacing_mm: {} values given for a {}D input", target_spacing_mm.size(), rank));
  }
  return target_spacing_mm;
}

void RunConfig::validate() const {
  try {
    registration.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("registration", fmt::format("registration.{}", e.what()));
  }
  try {
    descriptor.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("descriptor", fmt::format("descriptor.{}", e.what()));
  }
  for (double s : target_spacing_mm) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("target_spacing_mm", "target_spacing_mm: must be positive");
  }
  if (threads < 1) throw ConfigError("threads", "threads: must be at least 1");
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", fmt::format("config: cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", fmt::format("config: {} is not valid JSON: {}", path.string(), e.what()));
  }
}

RunConfig resolve_run_config(const std::optional<nlohmann::json>& file, const ConfigOverrides& flags,
                             std::optional<View> inferred_view) {
  View view = inferred_view.value_or(View::sax);
  if (file && file->is_object() && file->contains("view")) {
    const auto& v = (*file)["view"];
    if (!v.is_string()) throw ConfigError("view", "view: expected a string");
    try {
      view = view_from_string(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("view", fmt::format("view: {}", e.what()));
    }
  }
  if (flags.view) view = *flags.view;

  RunConfig cfg = RunConfig::for_view(view);
  if (file) apply_file(*file, cfg);

  if (flags.focus) cfg.focus = parse_focus(*flags.focus);
  if (flags.t_norm) cfg.descriptor.t_norm_percentile = *flags.t_norm;
  if (flags.t_delta_alpha) cfg.descriptor.t_delta_alpha = *flags.t_delta_alpha;
  if (flags.sigma) cfg.descriptor.gaussian_sigma = *flags.sigma;
  if (flags.lambda) cfg.registration.lambda_smooth = *flags.lambda;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;

  cfg.descriptor.focus_kind = cfg.focus.kind;
  cfg.descriptor.explicit_focus.reset();
  if (!cfg.focus.coords_xyz.empty()) {
    // Input-grid coordinates in axis order; rescaled once the grid is known.
    cfg.descriptor.explicit_focus = std::vector<double>(cfg.focus.coords_xyz.rbegin(), cfg.focus.coords_xyz.rend());
  }
  cfg.registration.threads = cfg.threads;
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["view"] = std::string(to_string(cfg.view));
  j["target_spacing_mm"] = cfg.target_spacing_mm.empty()
                               ? nlohmann::ordered_json(default_target_spacing_mm(cfg.view))
                               : nlohmann::ordered_json(cfg.target_spacing_mm);
  j["seed"] = cfg.seed;
  const auto& r = cfg.registration;
  j["registration"] = {{"lambda_smooth", r.lambda_smooth},
                       {"pyramid_levels", r.pyramid_levels},
                       {"iterations_per_level", r.iterations_per_level},
                       {"step_size", r.step_size},
                       {"ssim_window", r.ssim_window},
                       {"convergence_tol", r.convergence_tol},
                       {"warm_start", r.warm_start}};
  const auto& d = cfg.descriptor;
  j["descriptor"] = {{"t_norm_percentile", d.t_norm_percentile},
                     {"t_delta_alpha", d.t_delta_alpha},
                     {"gaussian_sigma", d.gaussian_sigma},
                     {"focus", to_string(cfg.focus)}};
  return j;
}

}  // namespace cardiokey::cli
