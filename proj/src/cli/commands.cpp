#include "cardiokey/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "cardiokey/core/interpolate.hpp"
#include "cardiokey/io/cvol.hpp"
#include "cardiokey/keyframes/evaluate.hpp"
#include "cardiokey/registration/register.hpp"

namespace cardiokey::cli {

namespace {

using ojson = nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

void write_json(const fs::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<double> reversed(const std::vector<double>& v) { return {v.rbegin(), v.rend()}; }

/// Explicit focus given on the input grid, moved to a grid with spacing
/// `grid_spacing`. Everything stays in axis order.
DescriptorConfig descriptor_config_for(const RunConfig& cfg, const std::vector<double>& input_spacing,
                                       const std::vector<double>& grid_spacing) {
  DescriptorConfig d = cfg.descriptor;
  if (d.explicit_focus) {
    auto coords = *d.explicit_focus;
    if (coords.size() != input_spacing.size()) {
      throw ConfigError("focus", fmt::format("focus: {} coordinates given for a {}D input", coords.size(),
                                             input_spacing.size()));
    }
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] *= input_spacing[k] / grid_spacing[k];
    d.explicit_focus = coords;
  }
  return d;
}

void write_loss_trace(const fs::path& path, const std::vector<std::vector<LossRecord>>& traces) {
  std::string text = "frame,level,iteration,loss\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (const auto& r : traces[t]) text += fmt::format("{},{},{},{}\n", t, r.level, r.iteration, r.loss);
  }
  write_text(path, text);
}

ojson focus_json(const FocusPoint& focus, const std::vector<double>& spacing) {
  ojson j;
  j["kind"] = std::string(to_string(focus.kind));
  j["coords_xyz"] = reversed(focus.coords);
  j["spacing_mm_xyz"] = reversed(spacing);
  return j;
}

std::string descriptor_csv(const MotionDescriptor& d) {
  std::ostringstream os;
  write_descriptor_csv(os, d);
  return os.str();
}

/// Descriptor, keyframes and their outputs for a field sequence living on a
/// grid with spacing fields.spacing().
KeyframeSet describe_and_write(const DisplacementFieldSequence& fields, const RunConfig& cfg,
                               const std::vector<double>& input_spacing, const fs::path& out,
                               bool emit_intermediates) {
  const auto dcfg = descriptor_config_for(cfg, input_spacing, fields.spacing());
  const auto descriptor = compute_descriptor(fields, dcfg);
  spdlog::info("focus {} at ({}), {} active points", to_string(descriptor.focus.kind),
               fmt::join(descriptor.focus.coords, ", "), descriptor.active_points());
  const auto keyframes = detect_keyframes(descriptor.alpha);

  write_text(out / "descriptor.csv", descriptor_csv(descriptor));
  if (emit_intermediates) io::write_mask(out / "mask", descriptor.mask, descriptor.shape, fields.spacing());

  auto j = keyframes_to_json(keyframes);
  j["focus"] = focus_json(descriptor.focus, fields.spacing());
  j["active_points"] = descriptor.active_points();
  j["config"] = to_json(cfg);
  write_json(out / "keyframes.json", j);
  return keyframes;
}

struct RegisteredInput {
  SequenceRegistration registration;
  std::vector<double> input_spacing;
};

RegisteredInput register_input(const fs::path& input, const RunConfig& cfg, const fs::path& out,
                               bool emit_resampled) {
  const auto seq = io::to_sequence(io::read_cvol(input));
  const auto target = cfg.target_spacing(seq.shape().rank());
  spdlog::info("{}: T={} dims ({}) spacing ({}) -> ({})", input.string(), seq.length(),
               fmt::join(seq.shape().dims(), ", "), fmt::join(seq.spacing(), ", "), fmt::join(target, ", "));
  if (seq.spacing() == target) return {register_sequence(seq, cfg.registration), seq.spacing()};
  const auto resampled = resample(seq, target);
  if (emit_resampled) io::write_cvol(out / "resampled", io::from_sequence(resampled));
  return {register_sequence(resampled, cfg.registration), seq.spacing()};
}

std::string read_string(const nlohmann::json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ConfigError(context + "." + key, fmt::format("{}.{}: expected a string", context, key));
  }
  return j[key].get<std::string>();
}

std::map<std::string, KeyframeSet> read_predictions(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError("predictions", fmt::format("predictions: {} is not a directory", dir.string()));
  }
  std::map<std::string, KeyframeSet> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    fs::path file;
    std::string id;
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      file = entry.path();
      id = entry.path().stem().string();
    } else if (entry.is_directory() && fs::is_regular_file(entry.path() / "keyframes.json")) {
      file = entry.path() / "keyframes.json";
      id = entry.path().filename().string();
    } else {
      continue;
    }
    out[id] = keyframes_from_json(load_json_file(file), id);
  }
  if (out.empty()) {
    throw ConfigError("predictions", fmt::format("predictions: no keyframe files in {}", dir.string()));
  }
  return out;
}

struct ResolvedPhantom {
  PhantomSpec spec;
  std::string profile;
};

ResolvedPhantom phantom_spec_from(const PhantomOptions& opts) {
  std::string profile = opts.profile;
  std::size_t frames = opts.frames;
  auto dims_xyz = opts.dims_xyz;
  auto seed = opts.seed;
  double noise = opts.noise;
  nlohmann::json file = nlohmann::json::object();
  if (opts.spec_file) {
    file = load_json_file(*opts.spec_file);
    if (!file.is_object()) throw ConfigError("spec", "spec: expected an object");
    static const std::vector<std::string> allowed{"profile", "T", "dims", "seed", "noise_sigma", "schedule",
                                                  "center", "ring_radius", "ring_width", "twist",
                                                  "texture_lobes", "texture_depth"};
    for (const auto& [key, value] : file.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError("spec." + key, fmt::format("spec.{}: unknown key", key));
      }
    }
    try {
      if (file.contains("profile")) profile = file["profile"].get<std::string>();
      if (file.contains("T")) frames = file["T"].get<std::size_t>();
      if (file.contains("dims")) dims_xyz = file["dims"].get<std::vector<std::size_t>>();
      if (file.contains("seed")) seed = file["seed"].get<std::uint64_t>();
      if (file.contains("noise_sigma")) noise = file["noise_sigma"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("spec", fmt::format("spec: {}", e.what()));
    }
  }
  if (dims_xyz.size() < 2 || dims_xyz.size() > 3) throw ConfigError("dims", "dims: expected 2 or 3 extents");

  ScheduleProfile parsed_profile;
  try {
    parsed_profile = schedule_profile_from_string(profile);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("profile", fmt::format("profile: {}", e.what()));
  }
  const Shape shape(std::vector<std::size_t>(dims_xyz.rbegin(), dims_xyz.rend()));
  auto spec = [&] {
    try {
      if (file.contains("schedule")) {
        // Frame count comes from the explicit schedule; the profile only
        // fills the remaining geometry.
        const auto schedule = file["schedule"].get<std::vector<double>>();
        auto s = make_phantom_spec(parsed_profile, std::max<std::size_t>(schedule.size(), 10), shape, seed, noise);
        s.schedule = schedule;
        s.truth = schedule_keyframes(schedule);
        return s;
      }
      return make_phantom_spec(parsed_profile, frames, shape, seed, noise);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("spec.schedule", fmt::format("spec.schedule: {}", e.what()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("T", fmt::format("T: {}", e.what()));
    }
  }();
  try {
    if (file.contains("center")) spec.center = reversed(file["center"].get<std::vector<double>>());
    if (file.contains("ring_radius")) spec.ring_radius = file["ring_radius"].get<double>();
    if (file.contains("ring_width")) spec.ring_width = file["ring_width"].get<double>();
    if (file.contains("twist")) spec.twist = file["twist"].get<double>();
    if (file.contains("texture_lobes")) spec.texture_lobes = file["texture_lobes"].get<int>();
    if (file.contains("texture_depth")) spec.texture_depth = file["texture_depth"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("spec", fmt::format("spec: {}", e.what()));
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("spec", fmt::format("spec: {}", e.what()));
  }
  return {spec, std::string(to_string(parsed_profile))};
}

// Integer >= 0; json built in code stores small literals as signed.
bool is_count(const nlohmann::json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; }

}  // namespace

ojson keyframes_to_json(const KeyframeSet& set) {
  ojson j;
  j["T"] = set.length;
  ojson kf = ojson::object();
  for (auto k : kAllKeyframes) {
    kf[std::string(to_string(k))] = {{"index", set[k].index}, {"status", std::string(to_string(set[k].status))}};
  }
  j["keyframes"] = kf;
  return j;
}

KeyframeSet keyframes_from_json(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context, fmt::format("{}: expected an object", context));
  if (!j.contains("T") || !is_count(j["T"])) {
    throw ConfigError(context + ".T", fmt::format("{}.T: expected a positive integer", context));
  }
  KeyframeSet set;
  set.length = j["T"].get<std::size_t>();
  if (set.length == 0) throw ConfigError(context + ".T", fmt::format("{}.T: must be positive", context));
  if (!j.contains("keyframes") || !j["keyframes"].is_object()) {
    throw ConfigError(context + ".keyframes", fmt::format("{}.keyframes: expected an object", context));
  }
  for (const auto& [name, value] : j["keyframes"].items()) {
    const auto field = context + ".keyframes." + name;
    Keyframe k;
    try {
      k = keyframe_from_string(name);
    } catch (const std::invalid_argument&) {
      throw ConfigError(field, fmt::format("{}: unknown keyframe", field));
    }
    KeyframeEntry entry;
    if (is_count(value)) {
      entry.index = value.get<std::size_t>();
      entry.status = KeyframeStatus::detected;
    } else if (value.is_object() && value.contains("index") && is_count(value["index"])) {
      entry.index = value["index"].get<std::size_t>();
      entry.status = value.contains("status")
                         ? keyframe_status_from_string(read_string(value, "status", field))
                         : KeyframeStatus::detected;
    } else {
      throw ConfigError(field + ".index", fmt::format("{}.index: expected a non-negative integer", field));
    }
    if (entry.index >= set.length) {
      throw ConfigError(field + ".index", fmt::format("{}.index: {} is outside T={}", field, entry.index, set.length));
    }
    set[k] = entry;
  }
  return set;
}

void write_descriptor_csv(std::ostream& os, const MotionDescriptor& d) {
  os << "frame,alpha_raw,alpha,magnitude,magnitude_normalized\n";
  for (std::size_t t = 0; t < d.alpha.size(); ++t) {
    os << fmt::format("{},{},{},{},{}\n", t, d.alpha_raw[t], d.alpha[t], d.magnitude[t], d.magnitude_normalized[t]);
  }
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = std::min(text.find('x', start), text.size());
    const auto part = text.substr(start, pos - start);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || value == 0) {
      throw ConfigError("dims", fmt::format("dims: cannot parse '{}'", text));
    }
    dims.push_back(value);
    start = pos + 1;
  }
  if (dims.size() < 2 || dims.size() > 3) throw ConfigError("dims", "dims: expected XxY or XxYxZ");
  return dims;
}

KeyframeSet cmd_detect(const DetectOptions& opts) {
  fs::create_directories(opts.out);
  const auto reg = register_input(opts.input, opts.config, opts.out, opts.emit_intermediates);
  if (opts.emit_intermediates) {
    io::write_fields(opts.out / "fields", reg.registration.fields);
    write_loss_trace(opts.out / "loss_trace.csv", reg.registration.loss_traces);
  }
  return describe_and_write(reg.registration.fields, opts.config, reg.input_spacing, opts.out,
                            opts.emit_intermediates);
}

void cmd_register(const RegisterOptions& opts) {
  fs::create_directories(opts.out);
  const auto reg = register_input(opts.input, opts.config, opts.out, false);
  io::write_fields(opts.out / "fields", reg.registration.fields);
  write_loss_trace(opts.out / "loss_trace.csv", reg.registration.loss_traces);
  ojson j;
  j["T"] = reg.registration.fields.length();
  j["config"] = to_json(opts.config);
  write_json(opts.out / "registration.json", j);
}

KeyframeSet cmd_describe(const DescribeOptions& opts) {
  fs::create_directories(opts.out);
  const auto fields = io::read_fields(opts.fields);
  return describe_and_write(fields, opts.config, fields.spacing(), opts.out, opts.emit_intermediates);
}

void cmd_evaluate(const EvaluateOptions& opts, std::ostream& stdout_stream) {
  const auto predictions = read_predictions(opts.predictions);
  const auto refs = load_json_file(opts.references);
  if (!refs.is_object()) throw ConfigError("references", "references: expected an object keyed by case id");

  std::vector<std::string> missing;
  std::vector<EvaluationCase> cases;
  for (const auto& [id, prediction] : predictions) {
    if (!refs.contains(id)) {
      missing.push_back(id);
      continue;
    }
    cases.push_back({id, prediction, keyframes_from_json(refs[id], "references." + id)});
  }
  if (!missing.empty()) {
    throw ConfigError("references", fmt::format("references: no reference for case(s) {}", fmt::join(missing, ", ")));
  }
  EvaluationReport report;
  try {
    report = evaluate(cases);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("references", fmt::format("references: {}", e.what()));
  }
  if (opts.out) {
    std::ofstream out(*opts.out, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", opts.out->string()));
    write_evaluation_csv(out, report);
  } else {
    write_evaluation_csv(stdout_stream, report);
  }
}

Phantom cmd_phantom(const PhantomOptions& opts) {
  const auto [spec, profile] = phantom_spec_from(opts);
  auto phantom = generate(spec);
  fs::create_directories(opts.out);
  io::write_cvol(opts.out, io::from_sequence(phantom.images));
  if (opts.emit_intermediates) io::write_fields(opts.out / "truth_fields", phantom.fields);

  auto j = keyframes_to_json(phantom.truth);
  j["profile"] = profile;
  j["schedule"] = spec.schedule;
  ojson s;
  s["dims_xyz"] = std::vector<std::size_t>(spec.dims.dims().rbegin(), spec.dims.dims().rend());
  s["spacing_mm_xyz"] = phantom_spacing(spec.dims.rank());
  s["center_xyz"] = reversed(spec.center);
  s["ring_radius"] = spec.ring_radius;
  s["ring_width"] = spec.ring_width;
  s["twist"] = spec.twist;
  s["texture_lobes"] = spec.texture_lobes;
  s["texture_depth"] = spec.texture_depth;
  s["noise_sigma"] = spec.noise_sigma;
  s["seed"] = spec.seed;
  j["spec"] = s;
  write_json(opts.out / "truth.json", j);
  return phantom;
}

}  // namespace cardiokey::cli
