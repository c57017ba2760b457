#include "hybridfuse/pipeline.hpp"

#include "hybridfuse/errors.hpp"

#include <cstdio>

namespace hybridfuse {

GnbModel train_on_session(const Session& session, bool standardize) {
  const auto data = labeled_features(session);
  TrainOptions options;
  options.standardize = standardize;
  return train_gnb(data, std::nullopt, options);
}

std::vector<TrialDecisionRecord> SessionOutcome::records() const {
  std::vector<TrialDecisionRecord> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.record);
  return out;
}

namespace {

std::string tally_text(const char* name, const Tally& t) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s %zu/%zu (%.1f%%)", name, t.correct, t.scored, 100.0 * t.accuracy());
  return buf;
}

void count(Tally& t, const std::optional<AoiId>& truth, const std::optional<AoiId>& chosen) {
  if (!truth) return;
  ++t.scored;
  if (chosen == truth) ++t.correct;
}

}  // namespace

std::string SessionOutcome::summary_line() const {
  return session_id + ": " + tally_text("fused", fused) + "  " + tally_text("eeg", eeg_only) + "  " +
         tally_text("et", et_only) + "  fallback " + std::to_string(fallbacks) + "  rejected " +
         std::to_string(rejections);
}

SessionOutcome classify_session(const Session& session, const GnbModel& model, const FusionConfig& cfg) {
  cfg.validate();
  SessionOutcome out;
  out.session_id = session.manifest.session_id;
  for (const TrialBundle& b : session.trials) {
    TrialOutcome t;
    t.record.trial = b.trial;
    t.record.truth = b.target_aoi;
    t.record.decision = decide_trial(b, model, session.layout, cfg);
    const auto& d = t.record.decision;
    t.eeg_only = argmax_id(d.c_eeg);
    try {
      t.et_only = argmax_id(aoi_confidences(b.gaze, session.layout, cfg.denominator).scores);
    } catch (const EmptyTrialError&) {
    }
    if (d.mode == DecisionMode::FallbackEeg) ++out.fallbacks;
    if (d.mode == DecisionMode::Rejected) ++out.rejections;
    count(out.fused, b.target_aoi, d.chosen_aoi);
    count(out.eeg_only, b.target_aoi, t.eeg_only);
    count(out.et_only, b.target_aoi, t.et_only);
    out.trials.push_back(std::move(t));
  }
  return out;
}

}  // namespace hybridfuse
