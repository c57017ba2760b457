#include "hybridfuse/fusion.hpp"

#include "hybridfuse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hybridfuse {

std::string_view to_string(DecisionMode mode) {
  switch (mode) {
    case DecisionMode::Fused: return "fused";
    case DecisionMode::FallbackEeg: return "fallback-eeg";
    case DecisionMode::Rejected: return "rejected";
  }
  return "?";
}

std::string_view to_string(ConfidenceMode mode) {
  return mode == ConfidenceMode::Literal ? "literal" : "posterior";
}

std::string_view to_string(FallbackPolicy policy) {
  return policy == FallbackPolicy::EegArgmax ? "eeg-argmax" : "reject";
}

std::string_view to_string(AggregationMode mode) {
  return mode == AggregationMode::Mean ? "mean" : "logodds";
}

std::string_view to_string(EtDenominator denominator) {
  return denominator == EtDenominator::AllValid ? "all" : "onscreen";
}

void FusionConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("fusion threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
}

std::vector<AoiId> rank_descending(std::span<const double> scores) {
  std::vector<AoiId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 1);
  std::stable_sort(ids.begin(), ids.end(), [&](AoiId a, AoiId b) {
    return scores[static_cast<std::size_t>(a - 1)] > scores[static_cast<std::size_t>(b - 1)];
  });
  return ids;
}

AoiId argmax_id(std::span<const double> scores) {
  if (scores.empty()) throw LengthMismatchError("argmax of empty score vector");
  return static_cast<AoiId>(std::max_element(scores.begin(), scores.end()) - scores.begin()) + 1;
}

FusionDecision fuse(std::span<const double> c_eeg, std::span<const double> c_et, const FusionConfig& cfg) {
  cfg.validate();
  if (c_eeg.size() != c_et.size()) {
    throw LengthMismatchError("EEG and ET score vectors differ in length (" + std::to_string(c_eeg.size()) +
                              " vs " + std::to_string(c_et.size()) + ")");
  }
  if (c_eeg.size() < 2) throw LengthMismatchError("fusion needs at least 2 AOIs");
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(c_eeg.begin(), c_eeg.end(), finite) || !std::all_of(c_et.begin(), c_et.end(), finite)) {
    throw std::invalid_argument("fusion scores must be finite");
  }

  FusionDecision d;
  d.c_eeg.assign(c_eeg.begin(), c_eeg.end());
  d.c_et.assign(c_et.begin(), c_et.end());

  const auto ranking = rank_descending(c_eeg);
  for (AoiId id : ranking) {
    ++d.rank_inspected;
    if (c_et[static_cast<std::size_t>(id - 1)] >= cfg.threshold) {
      d.chosen_aoi = id;
      d.mode = DecisionMode::Fused;
      return d;
    }
  }
  if (cfg.fallback == FallbackPolicy::EegArgmax) {
    d.chosen_aoi = ranking.front();
    d.mode = DecisionMode::FallbackEeg;
  } else {
    d.mode = DecisionMode::Rejected;
  }
  return d;
}

TrialEegScores score_trial_eeg(const TrialBundle& bundle, const GnbModel& model, std::size_t aoi_count,
                               const FusionConfig& cfg) {
  if (bundle.features.size() != bundle.events.size()) {
    throw CrossRefError("trial " + std::to_string(bundle.trial) + " has " + std::to_string(bundle.events.size()) +
                        " events but " + std::to_string(bundle.features.size()) + " feature vectors");
  }
  std::vector<EventScore> events;
  events.reserve(bundle.events.size());
  for (std::size_t i = 0; i < bundle.events.size(); ++i) {
    EventScore e;
    e.aoi_id = bundle.events[i].aoi_id;
    e.scores = bayes_scores(model, bundle.features[i]);
    e.confidence = target_confidence(e.scores, cfg.eeg_mode);
    events.push_back(e);
  }
  return aggregate_trial(events, aoi_count, cfg.aggregation);
}

FusionDecision classify_trial(const TrialBundle& bundle, const GnbModel& model, const AoiLayout& layout,
                              const FusionConfig& cfg) {
  const EtConfidence et = aoi_confidences(bundle.gaze, layout, cfg.denominator);
  const TrialEegScores eeg = score_trial_eeg(bundle, model, layout.size(), cfg);
  return fuse(eeg.scores, et.scores, cfg);
}

FusionDecision decide_trial(const TrialBundle& bundle, const GnbModel& model, const AoiLayout& layout,
                            const FusionConfig& cfg) {
  try {
    return classify_trial(bundle, model, layout, cfg);
  } catch (const EmptyTrialError&) {
    FusionDecision d;
    d.c_eeg = score_trial_eeg(bundle, model, layout.size(), cfg).scores;
    d.c_et.assign(layout.size(), 0.0);
    d.mode = DecisionMode::Rejected;
    return d;
  }
}

}  // namespace hybridfuse
