#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cardiokey/core/sequence.hpp"
#include "cardiokey/keyframes/keyframes.hpp"

namespace cardiokey {

enum class ScheduleProfile { normal, no_md_peak, weak_relaxation };

std::string_view to_string(ScheduleProfile profile);
ScheduleProfile schedule_profile_from_string(std::string_view name);

/// Smooth cyclic radial motion rate a(t) (negative = contraction) built from
/// wrapped Gaussian bumps: one systolic trough and one or two diastolic
/// peaks. The systolic amplitude is solved so the schedule sums to zero, and
/// the whole curve is scaled to a total systolic excursion of 1.
/// Throws std::invalid_argument for T < 10.
std::vector<double> default_schedule(std::size_t frames, ScheduleProfile profile);

/// Keyframes read directly off a schedule: MS at its minimum, ES/ED at the
/// rising/falling sign changes, PF at its maximum and MD at the last
/// secondary peak of the positive run (PF, flagged fallback, when there is
/// none). Entries are missing when the schedule has no sign change.
KeyframeSet schedule_keyframes(const std::vector<double>& schedule);

/// Synthetic cine sequence: a textured annulus (a tapered cylinder in 3D)
/// whose radius follows the integrated schedule while its texture turns by
/// `twist` radians over the cycle.
struct PhantomSpec {
  Shape dims;
  std::vector<double> center;
  std::vector<double> schedule;  // grid units per frame
  double ring_radius = 18.0;
  double ring_width = 7.0;
  double twist = 0.0;          // radians per cycle
  int texture_lobes = 8;
  double texture_depth = 0.3;
  double noise_sigma = 0.0;    // fraction of the clean intensity range
  std::uint64_t seed = 0;
  KeyframeSet truth;

  std::size_t frames() const { return schedule.size(); }
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Default phantom for a profile: ring at 28% of the in-plane extent,
/// systolic excursion of 30% of the radius, one texture period of twist.
PhantomSpec make_phantom_spec(ScheduleProfile profile, std::size_t frames, const Shape& dims,
                              std::uint64_t seed = 0, double noise_sigma = 0.0);

struct Phantom {
  ImageSequence images;
  /// Analytic pull fields: field t maps frame t onto frame t + 1.
  DisplacementFieldSequence fields;
  KeyframeSet truth;
};

/// Renders the sequence. Deterministic for a given spec (including seed).
Phantom generate(const PhantomSpec& spec);

/// Spacing written for generated phantoms: 1.0 mm in 2D, 2.5 mm in 3D.
std::vector<double> phantom_spacing(std::size_t rank);

}  // namespace cardiokey
