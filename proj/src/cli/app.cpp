#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cardiokey/cli/commands.hpp"
#include "cardiokey/core/errors.hpp"
#include "cardiokey/io/cvol.hpp"

namespace cardiokey::cli {

namespace {

void setup_logging() {
  auto logger = spdlog::get("cardiokey");
  if (!logger) logger = spdlog::stderr_logger_st("cardiokey");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("CARDIOKEY_LOG"); env && *env) {
    const std::string name(env);
    level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
      level = spdlog::level::warn;
      spdlog::warn("CARDIOKEY_LOG: unknown level '{}'", name);
    }
  }
  spdlog::set_level(level);
}

/// Flags shared by detect, register and describe.
struct RunFlags {
  std::string view, focus, config;
  double t_norm = 0, t_delta_alpha = 0, sigma = 0, lambda = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool emit_intermediates = false;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app, bool with_intermediates) {
    options = {
        app->add_option("--view", view, "Acquisition view: sax or fourch (default: from dimensionality)"),
        app->add_option("--focus", focus, "Focus: mse, vol, explicit:X,Y[,Z], lv:X,Y[,Z] or sept:X,Y[,Z]"),
        app->add_option("--t-norm", t_norm, "Magnitude percentile threshold"),
        app->add_option("--t-delta-alpha", t_delta_alpha, "Direction-change threshold"),
        app->add_option("--sigma", sigma, "Gaussian smoothing of alpha, in frames"),
        app->add_option("--lambda", lambda, "Smoothness weight of the registration loss"),
        app->add_option("--seed", seed, "Seed recorded with the run"),
        app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber),
    };
    app->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    if (with_intermediates) app->add_flag("--emit-intermediates", emit_intermediates, "Write fields, mask and loss trace");
  }

  bool given(std::size_t i) const { return options[i]->count() > 0; }

  RunConfig resolve(std::optional<View> inferred) const {
    ConfigOverrides o;
    if (given(0)) {
      try {
        o.view = view_from_string(view);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("view", std::string("view: ") + e.what());
      }
    }
    if (given(1)) o.focus = focus;
    if (given(2)) o.t_norm = t_norm;
    if (given(3)) o.t_delta_alpha = t_delta_alpha;
    if (given(4)) o.sigma = sigma;
    if (given(5)) o.lambda = lambda;
    if (given(6)) o.seed = seed;
    if (given(7)) o.threads = threads;
    std::optional<nlohmann::json> file;
    if (!config.empty()) file = load_json_file(config);
    return resolve_run_config(file, o, inferred);
  }
};

/// View implied by the rank recorded in a cvol header; unset when the header
/// cannot be read (the real read reports that properly).
std::optional<View> infer_view(const fs::path& cvol_dir) {
  try {
    const auto header = load_json_file(cvol_dir / "header.json");
    const auto rank = header.at("dims").size() - 1;
    if (rank == 2) return View::fourch;
    if (rank == 3) return View::sax;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

int run(CLI::App& app, int argc, const char* const* argv) {
  app.require_subcommand(1);

  auto* detect = app.add_subcommand("detect", "Detect keyframes in an image sequence");
  DetectOptions det;
  RunFlags det_flags;
  std::string det_in, det_out;
  detect->add_option("input", det_in, "Input cvol directory")->required();
  detect->add_option("--out", det_out, "Output directory")->required();
  det_flags.attach(detect, true);

  auto* reg = app.add_subcommand("register", "Compute the frame-to-frame displacement fields");
  RunFlags reg_flags;
  std::string reg_in, reg_out;
  reg->add_option("input", reg_in, "Input cvol directory")->required();
  reg->add_option("--out", reg_out, "Output directory")->required();
  reg_flags.attach(reg, false);

  auto* desc = app.add_subcommand("describe", "Motion descriptor and keyframes from precomputed fields");
  RunFlags desc_flags;
  std::string desc_in, desc_out;
  desc->add_option("fields", desc_in, "Field directory (u_z/u_y/u_x cvols)")->required();
  desc->add_option("--out", desc_out, "Output directory")->required();
  desc_flags.attach(desc, true);

  auto* eval = app.add_subcommand("evaluate", "Cyclic frame difference of predictions against references");
  std::string eval_pred, eval_ref, eval_out;
  eval->add_option("--predictions", eval_pred, "Directory of <case>.json or <case>/keyframes.json")->required();
  eval->add_option("--references", eval_ref, "JSON object mapping case id to keyframes")->required();
  eval->add_option("--out", eval_out, "CSV output file (default: stdout)");

  auto* ph = app.add_subcommand("phantom", "Generate a synthetic sequence with known keyframes");
  PhantomOptions pho;
  std::string ph_dims = "64x64", ph_spec, ph_out;
  ph->add_option("--profile", pho.profile, "normal, no_md_peak or weak_relaxation");
  ph->add_option("--T", pho.frames, "Frame count (>= 10)");
  ph->add_option("--dims", ph_dims, "Grid extent XxY or XxYxZ");
  ph->add_option("--seed", pho.seed, "Noise seed");
  ph->add_option("--noise", pho.noise, "Noise sigma as a fraction of the intensity range");
  ph->add_option("--spec", ph_spec, "JSON phantom description")->check(CLI::ExistingFile);
  ph->add_option("--out", ph_out, "Output cvol directory")->required();
  ph->add_flag("--emit-intermediates", pho.emit_intermediates, "Also write the analytic fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (detect->parsed()) {
    det.input = det_in;
    det.out = det_out;
    det.config = det_flags.resolve(infer_view(det.input));
    det.emit_intermediates = det_flags.emit_intermediates;
    cmd_detect(det);
  } else if (reg->parsed()) {
    RegisterOptions o{reg_in, reg_out, reg_flags.resolve(infer_view(reg_in))};
    cmd_register(o);
  } else if (desc->parsed()) {
    DescribeOptions o{desc_in, desc_out, desc_flags.resolve(infer_view(fs::path(desc_in) / "u_x")),
                      desc_flags.emit_intermediates};
    cmd_describe(o);
  } else if (eval->parsed()) {
    EvaluateOptions o{eval_pred, eval_ref, std::nullopt};
    if (!eval_out.empty()) o.out = eval_out;
    cmd_evaluate(o, std::cout);
  } else if (ph->parsed()) {
    pho.dims_xyz = parse_dims(ph_dims);
    pho.out = ph_out;
    if (!ph_spec.empty()) pho.spec_file = ph_spec;
    cmd_phantom(pho);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  setup_logging();
  CLI::App app{"Cardiac keyframe detection from cine image sequences", "cardiokey"};
  const auto fail = [](int code, const std::string& message) {
    std::cerr << "cardiokey: error: " << message << '\n';
    return code;
  };
  try {
    return run(app, argc, argv);
  } catch (const DegenerateMaskError& e) {
    return fail(kExitDegenerateMask, fmt::format("degenerate mask ({} filter): {}", e.filter(), e.what()));
  } catch (const NumericalFailure& e) {
    return fail(kExitNumerical,
                fmt::format("numerical failure at frame {} iteration {}: {}", e.frame(), e.iteration(), e.what()));
  } catch (const ConfigError& e) {
    return fail(kExitInput, e.what());
  } catch (const io::FormatError& e) {
    return fail(kExitInput, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitInput, e.what());
  } catch (const std::exception& e) {
    return fail(kExitFailure, e.what());
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("cardiokey");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cardiokey::cli
