// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "cardiokey/cli/run_config.hpp"
#include "cardiokey/core/config.hpp"
#include "cardiokey/core/errors.hpp"
#include "cardiokey/descriptor/descriptor.hpp"
#include "cardiokey/keyframes/keyframes.hpp"
#include "cardiokey/phantom/phantom.hpp"
#include "cardiokey/registration/register.hpp"
#include "cardiokey/registration/smoothness.hpp"
#include "cardiokey/registration/ssim.hpp"
#include "support/testing.hpp"

namespace fs = std::filesystem;
using namespace cardiokey;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (failures.size() < 6) failures.push_back(what);
    }
  }
};

int failed_criteria = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = seconds_since(start);
  if (!o.pass) ++failed_criteria;
  fmt::print("{} criterion {}: {} [{:.1f}s]{}{}\n", o.pass ? "PASS" : "FAIL", id, name, secs,
             o.detail.empty() ? "" : " ", o.detail);
  for (const auto& f : o.failures) fmt::print("    {}\n", f);
  for (const auto& n : o.notes) fmt::print("    note: {}\n", n);
  std::fflush(stdout);
}

DescriptorConfig descriptor_for(std::size_t rank) {
  return DescriptorConfig::for_view(rank == 3 ? View::sax : View::fourch);
}

// Normal-profile phantom with a seeded jitter of centre and ring size.
PhantomSpec seeded_spec(std::size_t frames, const Shape& dims, std::uint64_t seed, double noise = 0.0,
                        ScheduleProfile profile = ScheduleProfile::normal) {
  auto spec = make_phantom_spec(profile, frames, dims, seed, noise);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(0.9, 1.1);
  const std::size_t rank = dims.rank();
  for (std::size_t a = rank - 2; a < rank; ++a) spec.center[a] += jitter(rng);
  const double s = scale(rng);
  spec.ring_radius *= s;
  for (double& v : spec.schedule) v *= s;
  spec.truth = schedule_keyframes(spec.schedule);
  return spec;
}

std::string keyframe_line(const KeyframeSet& truth, const KeyframeSet& got) {
  std::string s;
  for (auto k : kAllKeyframes) s += fmt::format("{}={}/{} ", to_string(k), got[k].index, truth[k].index);
  return s + "(detected/truth)";
}

struct PhantomCase {
  std::size_t frames;
  Shape dims;
  std::uint64_t seed;
};

std::vector<PhantomCase> oracle_cases() {
  std::vector<PhantomCase> cases;
  const std::size_t lengths[] = {25, 30, 40};
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Shape dims = i % 2 == 0 ? Shape({64, 64}) : Shape({12, 40, 40});
    cases.push_back({lengths[i % 3], dims, 100 + i});
  }
  return cases;
}

// 1. Descriptor and detector on the analytic phantom fields.
Outcome descriptor_oracle() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t checked = 0, worst = 0;
  for (const auto& c : oracle_cases()) {
    const auto spec = seeded_spec(c.frames, c.dims, c.seed);
    const auto phantom = generate(spec);
    const auto d = compute_descriptor(phantom.fields, descriptor_for(c.dims.rank()));
    // Unit-excursion schedule, so 0.01 is relative to one full systole.
    const auto a = default_schedule(c.frames, ScheduleProfile::normal);
    for (std::size_t t = 0; t < c.frames; ++t) {
      if (std::abs(a[t]) <= 0.01) continue;
      ++checked;
      o.check(d.alpha[t] != 0.0 && std::signbit(d.alpha[t]) == std::signbit(a[t]),
              fmt::format("seed {} rank {} T={} frame {}: alpha {:.4f} vs a(t) {:.4f}", c.seed, c.dims.rank(),
                          c.frames, t, d.alpha[t], a[t]));
    }
    const auto k = detect_keyframes(d.alpha);
    for (auto kf : kAllKeyframes) {
      const auto e = cfd(k[kf].index, spec.truth[kf].index, c.frames);
      worst = std::max(worst, e);
      o.check(e <= 1, fmt::format("seed {} rank {} T={}: {}", c.seed, c.dims.rank(), c.frames,
                                  keyframe_line(spec.truth, k)));
    }
  }
  const double secs = seconds_since(start);
  o.check(secs < 10.0, fmt::format("runtime {:.1f}s exceeds 10s", secs));
  o.detail = fmt::format("(20 phantoms, {} signed frames, worst cFD {})", checked, worst);
  return o;
}

KeyframeSet run_pipeline(const PhantomSpec& spec) {
  const auto phantom = generate(spec);
  RegistrationConfig reg;
  reg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto fields = register_sequence(phantom.images, reg).fields;
  return detect_keyframes(compute_descriptor(fields, descriptor_for(spec.dims.rank())).alpha);
}

// Mean cFD per keyframe over `count` seeded 64x64, T=30 phantoms.
std::array<double, 5> pipeline_errors(std::uint64_t first_seed, int count, double noise, Outcome& o) {
  std::array<double, 5> mean{};
  for (int i = 0; i < count; ++i) {
    const auto spec = seeded_spec(30, Shape({64, 64}), first_seed + i, noise);
    const auto k = run_pipeline(spec);
    bool exact = true;
    for (std::size_t j = 0; j < 5; ++j) {
      const auto kf = kAllKeyframes[j];
      const auto e = cfd(k[kf].index, spec.truth[kf].index, 30);
      mean[j] += double(e) / count;
      exact = exact && e == 0;
    }
    if (!exact) o.notes.push_back(fmt::format("noise {} seed {}: {}", noise, first_seed + i,
                                                 keyframe_line(spec.truth, k)));
  }
  return mean;
}

// 2. Images -> registration -> descriptor -> keyframes.
Outcome end_to_end() {
  Outcome o;
  const auto start = Clock::now();
  const auto clean = pipeline_errors(200, 10, 0.0, o);
  const auto noisy = pipeline_errors(300, 10, 0.02, o);
  std::string clean_s, noisy_s;
  for (std::size_t j = 0; j < 5; ++j) {
    const auto name = to_string(kAllKeyframes[j]);
    clean_s += fmt::format("{}={:.1f} ", name, clean[j]);
    noisy_s += fmt::format("{}={:.1f} ", name, noisy[j]);
    o.check(clean[j] <= 2.0, fmt::format("noiseless mean cFD {} = {:.2f} > 2", name, clean[j]));
    o.check(noisy[j] <= 3.0, fmt::format("2% noise mean cFD {} = {:.2f} > 3", name, noisy[j]));
  }
  const double secs = seconds_since(start);
  o.check(secs < 300.0, fmt::format("runtime {:.1f}s exceeds 5 min", secs));
  o.detail = fmt::format("(noiseless {}| 2% noise {})", clean_s, noisy_s);
  return o;
}

// 3. Objective terms and the pair optimiser.
Outcome registration_objective() {
  Outcome o;
  using testing::gaussian_blob;
  const RegistrationConfig cfg;
  const Shape s({48, 48});
  // moving(x + 1) == fixed(x): the recovered pull field is +1 along x.
  const auto fixed = gaussian_blob(s, {24.0, 23.0}, 5.0);
  const auto moving = gaussian_blob(s, {24.0, 24.0}, 5.0);
  const auto r = register_pair(moving, fixed, cfg);
  std::vector<double> ux;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (fixed[i] > 0.2) ux.push_back(r.field.component(1)[i]);
  }
  std::nth_element(ux.begin(), ux.begin() + ux.size() / 2, ux.end());
  const double median = ux[ux.size() / 2];
  o.check(std::abs(median - 1.0) <= 0.3, fmt::format("median shift {:.3f}", median));

  for (std::size_t k = 1; k < r.loss_trace.size(); ++k) {
    const auto& prev = r.loss_trace[k - 1];
    const auto& cur = r.loss_trace[k];
    o.check(prev.level != cur.level || cur.loss <= prev.loss,
            fmt::format("loss rose at level {} iteration {}", cur.level, cur.iteration));
  }

  const auto img = testing::random_grid(Shape({32, 32}), 9);
  const auto id = register_pair(img, img, cfg);
  double mean = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) mean += id.field.norm_at(i);
  mean /= double(img.size());
  o.check(mean < 0.05, fmt::format("identity mean |phi| {:.4f}", mean));

  for (const Shape& shape : {Shape({20, 24}), Shape({8, 10, 12})}) {
    const auto a = testing::random_grid(shape, 4, -3.0, 5.0);
    o.check(ssim(a, a, cfg.ssim_window, 8.0) == 1.0, "ssim(I, I) != 1");
    VectorGrid constant(shape);
    for (std::size_t c = 0; c < shape.rank(); ++c) {
      for (auto& v : constant.component(c).values()) v = 0.7 * double(c + 1);
    }
    o.check(smoothness(constant) == 0.0, "smoothness of a constant field != 0");
    const auto f = testing::random_field(shape, 12, 1.5);
    const double base = smoothness(f);
    for (double c : {0.5, 2.0, 4.0}) {
      VectorGrid g(f);
      for (std::size_t a2 = 0; a2 < shape.rank(); ++a2) {
        for (auto& v : g.component(a2).values()) v *= c;
      }
      o.check(smoothness(g) == c * c * base, fmt::format("smoothness scaling by {} not exact", c));
    }
  }
  o.detail = fmt::format("(median shift {:.3f}, identity mean |phi| {:.2e}, {} trace entries)", median, mean,
                         r.loss_trace.size());
  return o;
}

// 4. cFD against enumeration of both walking directions.
Outcome cfd_suite() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t pairs = 0;
  for (std::size_t n = 2; n <= 32; ++n) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        std::size_t fwd = 0, bwd = 0;
        for (std::size_t i = p; i != q; i = (i + 1) % n) ++fwd;
        for (std::size_t i = q; i != p; i = (i + 1) % n) ++bwd;
        const auto d = cfd(p, q, n);
        o.check(d == std::min(fwd, bwd), fmt::format("cfd({}, {}, {}) = {}", p, q, n, d));
        o.check(d == cfd(q, p, n), fmt::format("asymmetric at ({}, {}, {})", p, q, n));
        o.check(d <= n / 2, fmt::format("bound broken at ({}, {}, {})", p, q, n));
        ++pairs;
      }
    }
  }
  const double secs = seconds_since(start);
  o.check(secs < 1.0, fmt::format("runtime {:.2f}s exceeds 1s", secs));
  o.detail = fmt::format("({} pairs)", pairs);
  return o;
}

DisplacementFieldSequence scaled(const DisplacementFieldSequence& seq, double s) {
  std::vector<VectorGrid> fields;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    VectorGrid f(seq.field(t));
    for (std::size_t a = 0; a < f.shape().rank(); ++a) {
      for (auto& v : f.component(a).values()) v *= s;
    }
    fields.push_back(std::move(f));
  }
  return {fields, seq.spacing()};
}

// 5. Scale, shift and order invariants.
Outcome invariance_suite() {
  Outcome o;
  double worst_scale = 0.0;
  std::size_t ordered = 0;
  const PhantomCase probes[] = {{30, Shape({64, 64}), 7}, {25, Shape({12, 40, 40}), 8}};
  for (const auto& c : probes) {
    const auto spec = seeded_spec(c.frames, c.dims, c.seed);
    const auto fields = generate(spec).fields;
    const auto cfg = descriptor_for(c.dims.rank());
    const auto base = compute_descriptor(fields, cfg);
    for (double s : {0.1, 3.0, 100.0}) {
      const auto d = compute_descriptor(scaled(fields, s), cfg);
      o.check(d.mask == base.mask, fmt::format("mask changed under scale {}", s));
      for (std::size_t t = 0; t < c.frames; ++t) {
        worst_scale = std::max(worst_scale, std::abs(d.alpha[t] - base.alpha[t]));
      }
    }
    const auto kb = detect_keyframes(base.alpha);
    for (std::size_t k : {std::size_t{1}, std::size_t{7}, c.frames - 1}) {
      const auto d = compute_descriptor(fields.rotated(k), cfg);
      const auto kr = detect_keyframes(d.alpha);
      for (std::size_t t = 0; t < c.frames; ++t) {
        o.check(d.alpha[(t + k) % c.frames] == base.alpha[t], fmt::format("alpha not shifted by {} at {}", k, t));
      }
      for (auto kf : kAllKeyframes) {
        o.check(kr[kf].status == kb[kf].status &&
                    (kb[kf].status != KeyframeStatus::detected || kr[kf].index == (kb[kf].index + k) % c.frames),
                fmt::format("{} not shifted by {}", to_string(kf), k));
      }
    }
  }
  o.check(worst_scale <= 1e-12, fmt::format("scale changed alpha by {:.3e}", worst_scale));

  for (const auto& c : oracle_cases()) {
    const auto spec = seeded_spec(c.frames, c.dims, c.seed);
    const auto d = compute_descriptor(generate(spec).fields, descriptor_for(c.dims.rank()));
    const auto [lo, hi] = std::minmax_element(d.alpha_raw.begin(), d.alpha_raw.end());
    for (double v : d.alpha) {
      o.check(v >= *lo - 1e-12 && v <= *hi + 1e-12 && std::abs(v) <= 1.0,
              fmt::format("smoothed alpha {:.4f} outside [{:.4f}, {:.4f}]", v, *lo, *hi));
    }
    const auto k = detect_keyframes(d.alpha);
    if (k.all_detected()) {
      ++ordered;
      o.check(k.cyclic_order_holds(), fmt::format("seed {}: order broken {}", c.seed, keyframe_line(spec.truth, k)));
    }
  }
  o.detail = fmt::format("(max scale deviation {:.1e}, order checked on {} phantoms)", worst_scale, ordered);
  return o;
}

// 6. Default configuration snapshot.
Outcome config_snapshot() {
  Outcome o;
  const RegistrationConfig reg;
  o.check(reg.lambda_smooth == 0.001, "lambda_smooth != 0.001");
  const DescriptorConfig desc;
  o.check(desc.gaussian_sigma == 2.0, "gaussian_sigma != 2");
  const auto sax = DescriptorConfig::for_view(View::sax);
  const auto four = DescriptorConfig::for_view(View::fourch);
  o.check(sax.t_norm_percentile == 50.0 && sax.t_delta_alpha == 0.8, "SAX thresholds");
  o.check(four.t_norm_percentile == 50.0 && four.t_delta_alpha == 1.2, "4CH thresholds");
  o.check(default_target_spacing_mm(View::sax) == 2.5, "SAX spacing");
  o.check(default_target_spacing_mm(View::fourch) == 1.0, "4CH spacing");

  const auto expect = [](const char* view, double spacing, double delta) {
    return nlohmann::json::parse(fmt::format(
        R"({{"view":"{}","target_spacing_mm":{},"seed":0,)"
        R"("registration":{{"lambda_smooth":0.001,"pyramid_levels":3,"iterations_per_level":100,)"
        R"("step_size":1.0,"ssim_window":7,"convergence_tol":1e-05,"warm_start":false}},)"
        R"("descriptor":{{"t_norm_percentile":50.0,"t_delta_alpha":{},"gaussian_sigma":2.0,"focus":"mse"}}}})",
        view, spacing, delta));
  };
  const auto got_sax = nlohmann::json(cli::to_json(cli::resolve_run_config(std::nullopt, {}, View::sax)));
  const auto got_four = nlohmann::json(cli::to_json(cli::resolve_run_config(std::nullopt, {}, View::fourch)));
  o.check(got_sax == expect("sax", 2.5, 0.8), "sax snapshot: " + got_sax.dump());
  o.check(got_four == expect("fourch", 1.0, 1.2), "fourch snapshot: " + got_four.dump());
  return o;
}

// 7. Static input and a cycle without a mid-diastolic peak.
Outcome degenerate_inputs() {
  Outcome o;
  auto still = make_phantom_spec(ScheduleProfile::normal, 10, Shape({32, 32}));
  std::fill(still.schedule.begin(), still.schedule.end(), 0.0);
  still.twist = 0.0;
  const auto fields = register_sequence(generate(still).images, RegistrationConfig{}).fields;
  std::string filter = "none";
  try {
    compute_descriptor(fields, descriptor_for(2));
  } catch (const DegenerateMaskError& e) {
    filter = e.filter();
  }
  o.check(filter == "direction-change", "static sequence raised: " + filter);

  const auto spec = seeded_spec(30, Shape({64, 64}), 400, 0.0, ScheduleProfile::no_md_peak);
  const auto k = run_pipeline(spec);
  o.check(k[Keyframe::md].status == KeyframeStatus::fallback, "MD not flagged fallback");
  std::size_t worst = 0;
  for (auto kf : {Keyframe::ed, Keyframe::ms, Keyframe::es, Keyframe::pf}) {
    const auto e = cfd(k[kf].index, spec.truth[kf].index, 30);
    worst = std::max(worst, e);
    o.check(k[kf].status == KeyframeStatus::detected, fmt::format("{} not detected", to_string(kf)));
    o.check(e <= 2, fmt::format("{} cFD {}: {}", to_string(kf), e, keyframe_line(spec.truth, k)));
  }
  o.detail = fmt::format("(static -> {} filter, no_md_peak worst cFD {})", filter, worst);
  return o;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

// 8. Repeated CLI runs produce identical keyframe files.
Outcome determinism() {
  Outcome o;
  testing::TempDir dir("acceptance");
  const std::string bin = CARDIOKEY_BIN;
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  o.check(shell(fmt::format("{} phantom --T 30 --dims 64x64 --seed 3 --noise 0.02 --out {}", q(bin),
                            q(dir / "in"))) == 0,
          "phantom command failed");
  const std::pair<const char*, const char*> runs[] = {{"a", "1"}, {"b", "1"}, {"c", "8"}};
  for (auto [name, threads] : runs) {
    o.check(shell(fmt::format("{} detect {} --out {} --seed 0 --threads {}", q(bin), q(dir / "in"), q(dir / name),
                              threads)) == 0,
            fmt::format("detect run {} failed", name));
  }
  const auto a = slurp(dir / "a" / "keyframes.json");
  o.check(!a.empty(), "no keyframes.json written");
  o.check(a == slurp(dir / "b" / "keyframes.json"), "repeat run differs");
  o.check(a == slurp(dir / "c" / "keyframes.json"), "--threads 8 differs from --threads 1");
  o.check(slurp(dir / "a" / "descriptor.csv") == slurp(dir / "c" / "descriptor.csv"), "descriptor.csv differs");
  o.detail = fmt::format("({} bytes compared)", a.size());
  return o;
}

}  // namespace

int main() {
  report(1, "descriptor oracle on analytic fields", descriptor_oracle);
  report(2, "end-to-end pipeline on phantoms", end_to_end);
  report(3, "registration objective", registration_objective);
  report(4, "cFD brute-force equivalence", cfd_suite);
  report(5, "invariance suite", invariance_suite);
  report(6, "default configuration snapshot", config_snapshot);
  report(7, "degenerate inputs", degenerate_inputs);
  report(8, "determinism across runs and threads", determinism);
  fmt::print("{} of 8 criteria passed\n", 8 - failed_criteria);
  return failed_criteria == 0 ? 0 : 1;
}
