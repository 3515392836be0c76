#include "cardiokey/keyframes/evaluate.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cardiokey {

namespace {

std::optional<CfdSummary> summarise(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  CfdSummary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

}  // namespace

EvaluationReport evaluate(const std::vector<EvaluationCase>& cases) {
  EvaluationReport report;
  std::array<std::vector<double>, 5> per_key;
  std::vector<double> pooled;
  for (const auto& c : cases) {
    if (c.prediction.length != c.reference.length) {
      throw std::invalid_argument("case " + c.case_id + ": prediction and reference cycle lengths differ");
    }
    for (std::size_t k = 0; k < kAllKeyframes.size(); ++k) {
      const Keyframe key = kAllKeyframes[k];
      const KeyframeEntry& ref = c.reference[key];
      if (ref.status == KeyframeStatus::missing) continue;
      const KeyframeEntry& pred = c.prediction[key];
      const std::size_t d = cfd(ref.index, pred.index, c.reference.length);
      report.rows.push_back({c.case_id, key, ref.index, pred.index, d});
      per_key[k].push_back(static_cast<double>(d));
      pooled.push_back(static_cast<double>(d));
    }
  }
  for (std::size_t k = 0; k < per_key.size(); ++k) report.per_keyframe[k] = summarise(per_key[k]);
  report.pooled = summarise(pooled);
  return report;
}

EvaluationReport evaluate(const std::vector<KeyframeSet>& predictions, const std::vector<KeyframeSet>& references) {
  if (predictions.size() != references.size()) {
    throw std::invalid_argument("prediction and reference lists differ in length");
  }
  std::vector<EvaluationCase> cases;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    cases.push_back({std::to_string(i), predictions[i], references[i]});
  }
  return evaluate(cases);
}

void write_evaluation_csv(std::ostream& os, const EvaluationReport& report) {
  fmt::print(os, "case_id,keyframe,reference,prediction,cfd\n");
  for (const auto& r : report.rows) {
    fmt::print(os, "{},{},{},{},{}\n", r.case_id, to_string(r.keyframe), r.reference, r.prediction, r.cfd);
  }
  fmt::print(os, "\nkeyframe,n,mean,sd\n");
  auto line = [&](std::string_view name, const std::optional<CfdSummary>& s) {
    if (s) {
      fmt::print(os, "{},{},{:.6f},{:.6f}\n", name, s->count, s->mean, s->sd);
    } else {
      fmt::print(os, "{},0,absent,absent\n", name);
    }
  };
  for (std::size_t k = 0; k < kAllKeyframes.size(); ++k) line(to_string(kAllKeyframes[k]), report.per_keyframe[k]);
  line("pooled", report.pooled);
}

}  // namespace cardiokey
