#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardiokey/core/config.hpp"
#include "cardiokey/core/focus.hpp"

namespace cardiokey::cli {

/// Invalid configuration or input; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Parsed --focus value. Coordinates are given as X,Y[,Z] in index units
/// of the input grid.
struct FocusSelection {
  FocusKind kind = FocusKind::mse;
  std::vector<double> coords_xyz;
};

/// Accepts "mse", "vol", "explicit:X,Y[,Z]", "lv:X,Y[,Z]", "sept:X,Y[,Z]".
FocusSelection parse_focus(std::string_view text);
std::string to_string(const FocusSelection& focus);

struct RunConfig {
  View view = View::sax;
  RegistrationConfig registration;
  DescriptorConfig descriptor;
  FocusSelection focus;
  /// Per-axis target spacing, slowest axis first; empty means the view's
  /// isotropic default.
  std::vector<double> target_spacing_mm;
  std::uint64_t seed = 0;
  int threads = 1;

  static RunConfig for_view(View view);
  std::vector<double> target_spacing(std::size_t rank) const;
  /// Throws ConfigError.
  void validate() const;
};

/// Values given on the command line; unset entries fall through.
struct ConfigOverrides {
  std::optional<View> view;
  std::optional<std::string> focus;
  std::optional<double> t_norm;
  std::optional<double> t_delta_alpha;
  std::optional<double> sigma;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

nlohmann::json load_json_file(const std::filesystem::path& path);

/// Flags override the config file, which overrides the view defaults. The
/// view itself comes from flags, then the file, then `inferred_view`.
RunConfig resolve_run_config(const std::optional<nlohmann::json>& file, const ConfigOverrides& flags,
                             std::optional<View> inferred_view = std::nullopt);

/// Effective configuration as echoed into outputs. The thread count is left
/// out since results do not depend on it.
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace cardiokey::cli
