#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardiokey {

enum class Keyframe { ed, ms, es, pf, md };
enum class KeyframeStatus { detected, fallback, missing };

inline constexpr std::array<Keyframe, 5> kAllKeyframes{Keyframe::ed, Keyframe::ms, Keyframe::es, Keyframe::pf,
                                                       Keyframe::md};

std::string_view to_string(Keyframe k);       // "ED", "MS", ...
std::string_view to_string(KeyframeStatus s);  // "detected", ...
Keyframe keyframe_from_string(std::string_view name);
KeyframeStatus keyframe_status_from_string(std::string_view name);

struct KeyframeEntry {
  std::size_t index = 0;
  KeyframeStatus status = KeyframeStatus::missing;
};

/// The five cardiac keyframes of one cycle of length `length`.
struct KeyframeSet {
  std::size_t length = 0;
  std::array<KeyframeEntry, 5> entries{};

  KeyframeEntry& operator[](Keyframe k) { return entries[static_cast<std::size_t>(k)]; }
  const KeyframeEntry& operator[](Keyframe k) const { return entries[static_cast<std::size_t>(k)]; }

  bool all_detected() const;
  /// True when MS -> ES -> PF -> MD -> ED occur in that cyclic order.
  bool cyclic_order_holds() const;
};

/// Cyclic central difference (a[t+1] - a[t-1]) / 2.
std::vector<double> cyclic_derivative(const std::vector<double>& signal);

/// Local maxima from + to - sign changes of the cyclic central difference,
/// in increasing index order. A run of zero derivatives between the
/// sign change resolves to its midpoint; an immediate change picks the
/// larger of the two samples.
std::vector<std::size_t> local_maxima(const std::vector<double>& signal);

/// Detects MS, ES, PF, ED and MD from the motion descriptor. Throws
/// std::invalid_argument when fewer than 5 frames are given; missing
/// features fall back and are flagged instead of throwing.
KeyframeSet detect_keyframes(const std::vector<double>& alpha);

/// Cyclic frame difference min(|p - q|, T - max(p, q) + min(p, q)).
/// Throws std::invalid_argument when an index is >= T.
std::size_t cfd(std::size_t p, std::size_t p_hat, std::size_t length);

}  // namespace cardiokey
