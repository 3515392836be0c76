#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cardiokey/cli/run_config.hpp"
#include "cardiokey/descriptor/descriptor.hpp"
#include "cardiokey/keyframes/keyframes.hpp"
#include "cardiokey/phantom/phantom.hpp"

namespace cardiokey::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitDegenerateMask = 3,
  kExitNumerical = 4,
};

struct DetectOptions {
  fs::path input;
  fs::path out;
  RunConfig config;
  bool emit_intermediates = false;
};

struct RegisterOptions {
  fs::path input;
  fs::path out;
  RunConfig config;
};

struct DescribeOptions {
  fs::path fields;
  fs::path out;
  RunConfig config;
  bool emit_intermediates = false;
};

struct EvaluateOptions {
  fs::path predictions;
  fs::path references;
  std::optional<fs::path> out;  // stdout when unset
};

struct PhantomOptions {
  std::string profile = "normal";
  std::size_t frames = 30;
  std::vector<std::size_t> dims_xyz{64, 64};
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::optional<fs::path> spec_file;
  fs::path out;
  bool emit_intermediates = false;
};

/// Images -> fields -> descriptor -> keyframes. Writes keyframes.json and
/// descriptor.csv; with intermediates also fields/, mask/, loss_trace.csv and
/// (when resampled) resampled/.
KeyframeSet cmd_detect(const DetectOptions& opts);

/// Writes fields/ and loss_trace.csv.
void cmd_register(const RegisterOptions& opts);

/// Descriptor and keyframes from precomputed fields.
KeyframeSet cmd_describe(const DescribeOptions& opts);

/// Throws ConfigError listing case ids without a reference.
void cmd_evaluate(const EvaluateOptions& opts, std::ostream& stdout_stream);

/// Writes the cvol and truth.json into opts.out.
Phantom cmd_phantom(const PhantomOptions& opts);

nlohmann::ordered_json keyframes_to_json(const KeyframeSet& set);
/// Reads {"T": n, "keyframes": {"ED": {"index": i, "status": s}, ...}}.
/// Absent keyframes are missing; absent status means detected.
KeyframeSet keyframes_from_json(const nlohmann::json& j, const std::string& context);

void write_descriptor_csv(std::ostream& os, const MotionDescriptor& descriptor);

/// Parses "64x64" or "64x64x16" (X x Y [x Z]).
std::vector<std::size_t> parse_dims(const std::string& text);

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace cardiokey::cli
