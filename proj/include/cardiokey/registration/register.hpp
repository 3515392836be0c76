#pragma once

#include <optional>
#include <vector>

#include "cardiokey/core/config.hpp"
#include "cardiokey/core/sequence.hpp"

namespace cardiokey {

struct LossRecord {
  int level = 0;  // 0 is full resolution
  int iteration = 0;
  double loss = 0.0;
};

struct RegistrationResult {
  VectorGrid field;
  double final_loss = 0.0;
  /// Accepted losses in optimisation order, coarsest level first.
  std::vector<LossRecord> loss_trace;
  ScalarGrid moved;
};

/// (1 - SSIM(fixed, moving o field)) + lambda * smoothness(field).
double registration_loss(const ScalarGrid& moving, const ScalarGrid& fixed, const VectorGrid& field,
                         const RegistrationConfig& cfg, double range);

/// Intensity span used for the SSIM constants of a pair; 1 for flat pairs.
double pair_intensity_range(const ScalarGrid& moving, const ScalarGrid& fixed);

/// Minimises registration_loss over a coarse-to-fine pyramid by gradient
/// descent with backtracking. The returned field pulls `moving` onto
/// `fixed`. Throws NumericalFailure when the loss becomes non-finite.
RegistrationResult register_pair(const ScalarGrid& moving, const ScalarGrid& fixed,
                                 const RegistrationConfig& cfg,
                                 const std::optional<VectorGrid>& init = std::nullopt);

struct SequenceRegistration {
  DisplacementFieldSequence fields;
  /// One trace per frame pair.
  std::vector<std::vector<LossRecord>> loss_traces;
};

/// Field t registers frame t (moving) to frame (t + 1) mod T (fixed).
SequenceRegistration register_sequence(const ImageSequence& seq, const RegistrationConfig& cfg);

}  // namespace cardiokey
