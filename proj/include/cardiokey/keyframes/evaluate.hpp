#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cardiokey/keyframes/keyframes.hpp"

namespace cardiokey {

struct EvaluationRow {
  std::string case_id;
  Keyframe keyframe = Keyframe::ed;
  std::size_t reference = 0;
  std::size_t prediction = 0;
  std::size_t cfd = 0;
};

struct CfdSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  /// Indexed like kAllKeyframes; empty when every reference lacks the keyframe.
  std::array<std::optional<CfdSummary>, 5> per_keyframe;
  std::optional<CfdSummary> pooled;
};

struct EvaluationCase {
  std::string case_id;
  KeyframeSet prediction;
  KeyframeSet reference;
};

/// Scores predictions against references with the cyclic frame difference.
/// Keyframes marked missing in a reference are skipped. Throws
/// std::invalid_argument when a prediction and its reference disagree on the
/// cycle length.
EvaluationReport evaluate(const std::vector<EvaluationCase>& cases);

/// List-based overload; throws std::invalid_argument on length mismatch.
EvaluationReport evaluate(const std::vector<KeyframeSet>& predictions, const std::vector<KeyframeSet>& references);

/// Per-case rows, a blank line, then the aggregate block
/// (keyframe,n,mean,sd; "absent" where nothing was scored).
void write_evaluation_csv(std::ostream& os, const EvaluationReport& report);

}  // namespace cardiokey
