#pragma once

#include "hybridfuse/core.hpp"
#include "hybridfuse/eeg_classifier.hpp"
#include "hybridfuse/gaze_analytics.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hybridfuse {

enum class FallbackPolicy {
  EegArgmax,  // no candidate had gaze support: take the EEG winner anyway
  Reject,     // no candidate had gaze support: emit no selection
};

enum class DecisionMode { Fused, FallbackEeg, Rejected };

std::string_view to_string(DecisionMode mode);
std::string_view to_string(ConfidenceMode mode);
std::string_view to_string(FallbackPolicy policy);
std::string_view to_string(AggregationMode mode);
std::string_view to_string(EtDenominator denominator);

inline constexpr double kDefaultFusionThreshold = 0.85;

struct FusionConfig {
  double threshold{kDefaultFusionThreshold};
  ConfidenceMode eeg_mode{ConfidenceMode::Posterior};
  FallbackPolicy fallback{FallbackPolicy::EegArgmax};
  AggregationMode aggregation{AggregationMode::Mean};
  EtDenominator denominator{EtDenominator::AllValid};

  // Throws ConfigError when the threshold is outside [0, 1].
  void validate() const;
};

struct FusionDecision {
  std::optional<AoiId> chosen_aoi;
  DecisionMode mode{DecisionMode::Rejected};
  std::vector<double> c_eeg;
  std::vector<double> c_et;
  int rank_inspected{0};

  friend bool operator==(const FusionDecision&, const FusionDecision&) = default;
};

// AOI ids sorted by descending score, ties broken by the lower id.
std::vector<AoiId> rank_descending(std::span<const double> scores);

// Highest-scoring AOI id, lowest id on ties.
AoiId argmax_id(std::span<const double> scores);

// Walks the EEG ranking and selects the first AOI whose gaze ratio meets
// the threshold; otherwise applies the fallback policy.
FusionDecision fuse(std::span<const double> c_eeg, std::span<const double> c_et, const FusionConfig& cfg);

// Per-event scoring and per-AOI aggregation of one trial's EEG features.
TrialEegScores score_trial_eeg(const TrialBundle& bundle, const GnbModel& model, std::size_t aoi_count,
                               const FusionConfig& cfg);

// Full per-trial pipeline: gaze ratios, EEG scores, fusion.
FusionDecision classify_trial(const TrialBundle& bundle, const GnbModel& model, const AoiLayout& layout,
                              const FusionConfig& cfg);

// classify_trial, but a trial without any valid gaze yields a rejected
// decision carrying the EEG scores instead of throwing. Used wherever one
// decision per trial must always be emitted (batch classify, live service).
FusionDecision decide_trial(const TrialBundle& bundle, const GnbModel& model, const AoiLayout& layout,
                            const FusionConfig& cfg);

}  // namespace hybridfuse
