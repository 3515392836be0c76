#include "cardiokey/keyframes/keyframes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cardiokey {

namespace {

// Forward distance from `from` to `to` on the cycle.
std::size_t ahead(std::size_t from, std::size_t to, std::size_t n) { return (to + n - from) % n; }

enum class Crossing { upward, downward };

// Zero crossing between t and t+1, localised by linear interpolation and
// rounded to the nearest frame. Upward: a[t] < 0 <= a[t+1].
std::optional<std::size_t> crossing_at(const std::vector<double>& a, std::size_t t, Crossing dir) {
  const std::size_t n = a.size();
  const double lo = a[t];
  const double hi = a[(t + 1) % n];
  const bool hit = dir == Crossing::upward ? (lo < 0.0 && hi >= 0.0) : (lo >= 0.0 && hi < 0.0);
  if (!hit) return std::nullopt;
  const double frac = lo / (lo - hi);
  return frac >= 0.5 ? (t + 1) % n : t;
}

// Last crossing whose bracketing pair starts at offsets [0, span) ahead of
// `start`.
std::optional<std::size_t> last_crossing(const std::vector<double>& a, std::size_t start, std::size_t span,
                                         Crossing dir) {
  const std::size_t n = a.size();
  std::optional<std::size_t> found;
  for (std::size_t k = 0; k < span; ++k) {
    if (auto c = crossing_at(a, (start + k) % n, dir)) found = *c;
  }
  return found;
}

}  // namespace

std::string_view to_string(Keyframe k) {
  switch (k) {
    case Keyframe::ed: return "ED";
    case Keyframe::ms: return "MS";
    case Keyframe::es: return "ES";
    case Keyframe::pf: return "PF";
    case Keyframe::md: return "MD";
  }
  return "ED";
}

std::string_view to_string(KeyframeStatus s) {
  switch (s) {
    case KeyframeStatus::detected: return "detected";
    case KeyframeStatus::fallback: return "fallback";
    case KeyframeStatus::missing: return "missing";
  }
  return "missing";
}

Keyframe keyframe_from_string(std::string_view name) {
  for (Keyframe k : kAllKeyframes) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown keyframe '" + std::string(name) + "'");
}

KeyframeStatus keyframe_status_from_string(std::string_view name) {
  for (auto s : {KeyframeStatus::detected, KeyframeStatus::fallback, KeyframeStatus::missing}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown keyframe status '" + std::string(name) + "'");
}

bool KeyframeSet::all_detected() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const KeyframeEntry& e) { return e.status == KeyframeStatus::detected; });
}

bool KeyframeSet::cyclic_order_holds() const {
  if (length == 0) return false;
  const std::size_t ms = (*this)[Keyframe::ms].index;
  std::size_t previous = 0;
  for (Keyframe k : {Keyframe::es, Keyframe::pf, Keyframe::md, Keyframe::ed}) {
    const std::size_t offset = ahead(ms, (*this)[k].index, length);
    if (offset < previous) return false;
    previous = offset;
  }
  return true;
}

std::vector<double> cyclic_derivative(const std::vector<double>& signal) {
  const std::size_t n = signal.size();
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) {
    d[t] = (signal[(t + 1) % n] - signal[(t + n - 1) % n]) / 2.0;
  }
  return d;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& signal) {
  const std::size_t n = signal.size();
  const std::vector<double> d = cyclic_derivative(signal);
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(d[t] > 0.0)) continue;
    // Skip a run of zero derivatives following the rise.
    std::size_t zeros = 0;
    while (zeros + 1 < n && d[(t + 1 + zeros) % n] == 0.0) ++zeros;
    const std::size_t after = (t + 1 + zeros) % n;
    if (!(d[after] < 0.0)) continue;
    std::size_t peak;
    if (zeros > 0) {
      peak = (t + 1 + (zeros - 1) / 2) % n;
    } else {
      peak = signal[after] > signal[t] ? after : t;
    }
    out.push_back(peak);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

KeyframeSet detect_keyframes(const std::vector<double>& alpha) {
  const std::size_t n = alpha.size();
  if (n < 5) throw std::invalid_argument("keyframe detection needs at least 5 frames");
  for (double v : alpha) {
    if (!std::isfinite(v)) throw std::invalid_argument("motion descriptor contains non-finite values");
  }
  KeyframeSet ks;
  ks.length = n;
  const std::vector<double> d = cyclic_derivative(alpha);
  const std::vector<std::size_t> maxima = local_maxima(alpha);
  auto is_max = [&](std::size_t t) { return std::binary_search(maxima.begin(), maxima.end(), t); };

  // MS: global minimum, earliest on ties.
  const auto ms = static_cast<std::size_t>(std::min_element(alpha.begin(), alpha.end()) - alpha.begin());
  ks[Keyframe::ms] = {ms, KeyframeStatus::detected};

  // ES: last upward crossing between MS and the first positive maximum.
  std::size_t es_span = n;
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t t = (ms + k) % n;
    if (is_max(t) && alpha[t] > 0.0) {
      es_span = k;
      break;
    }
  }
  if (auto es = last_crossing(alpha, ms, es_span, Crossing::upward)) {
    ks[Keyframe::es] = {*es, KeyframeStatus::detected};
  } else {
    std::size_t best = (ms + 1) % n;
    for (std::size_t k = 1; k < es_span; ++k) {
      const std::size_t t = (ms + k) % n;
      if (d[t] > d[best]) best = t;
    }
    ks[Keyframe::es] = {best, KeyframeStatus::fallback};
  }
  const std::size_t es = ks[Keyframe::es].index;

  // PF: first local maximum after ES, before returning to MS.
  const std::size_t es_to_ms = ahead(es, ms, n) == 0 ? n : ahead(es, ms, n);
  std::optional<std::size_t> pf;
  for (std::size_t k = 0; k < es_to_ms && !pf; ++k) {
    if (is_max((es + k) % n)) pf = (es + k) % n;
  }
  if (pf) {
    ks[Keyframe::pf] = {*pf, KeyframeStatus::detected};
  } else {
    std::size_t best = es;
    for (std::size_t k = 0; k < es_to_ms; ++k) {
      const std::size_t t = (es + k) % n;
      if (alpha[t] > alpha[best]) best = t;
    }
    ks[Keyframe::pf] = {best, KeyframeStatus::fallback};
  }
  const std::size_t pf_idx = ks[Keyframe::pf].index;

  // ED: last downward crossing from PF before MS.
  const std::size_t pf_to_ms = ahead(pf_idx, ms, n);
  if (auto ed = last_crossing(alpha, pf_idx, pf_to_ms, Crossing::downward)) {
    ks[Keyframe::ed] = {*ed, KeyframeStatus::detected};
  } else {
    std::size_t best = (pf_idx + 1) % n;
    for (std::size_t k = 1; k < pf_to_ms; ++k) {
      const std::size_t t = (pf_idx + k) % n;
      if (alpha[t] > alpha[best]) best = t;
    }
    ks[Keyframe::ed] = {best, KeyframeStatus::fallback};
  }
  const std::size_t ed = ks[Keyframe::ed].index;

  // MD: last local maximum strictly inside (PF, ED).
  const std::size_t pf_to_ed = ahead(pf_idx, ed, n);
  std::optional<std::size_t> md;
  for (std::size_t k = 1; k < pf_to_ed; ++k) {
    if (is_max((pf_idx + k) % n)) md = (pf_idx + k) % n;
  }
  ks[Keyframe::md] = md ? KeyframeEntry{*md, KeyframeStatus::detected}
                        : KeyframeEntry{pf_idx, KeyframeStatus::fallback};
  return ks;
}

std::size_t cfd(std::size_t p, std::size_t p_hat, std::size_t length) {
  if (p >= length || p_hat >= length) throw std::invalid_argument("frame index outside the cycle");
  const std::size_t hi = std::max(p, p_hat);
  const std::size_t lo = std::min(p, p_hat);
  return std::min(hi - lo, length - hi + lo);
}

}  // namespace cardiokey
