#pragma once

#include "hybridfuse/fusion.hpp"
#include "hybridfuse/session_io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hybridfuse {

// Fits a standardized GNB model on every labeled event of the session.
GnbModel train_on_session(const Session& session, bool standardize = true);

struct TrialOutcome {
  TrialDecisionRecord record;
  std::optional<AoiId> et_only;  // argmax of the gaze ratios; empty without gaze
  AoiId eeg_only{1};             // argmax of the EEG confidences
};

struct Tally {
  std::size_t correct{0};
  std::size_t scored{0};

  double accuracy() const { return scored == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(scored); }
};

struct SessionOutcome {
  std::string session_id;
  std::vector<TrialOutcome> trials;
  Tally fused;
  Tally et_only;
  Tally eeg_only;
  std::size_t fallbacks{0};
  std::size_t rejections{0};

  std::vector<TrialDecisionRecord> records() const;
  std::string summary_line() const;
};

// Runs the fused decider and both single-modality deciders on every trial.
SessionOutcome classify_session(const Session& session, const GnbModel& model, const FusionConfig& cfg);

}  // namespace hybridfuse
