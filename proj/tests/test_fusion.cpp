#include <doctest.h>

#include "hybridfuse/errors.hpp"
#include "hybridfuse/fusion.hpp"

#include <cmath>
#include <random>

using namespace hybridfuse;

namespace {

GnbModel unit_model() {
  GnbModel m;
  m.priors = {0.5, 0.5};
  m.means = {std::vector<double>{1.0}, std::vector<double>{-1.0}};
  m.variances = {std::vector<double>{1.0}, std::vector<double>{1.0}};
  return m;
}

// One flash per AOI per repetition; the P300 follows `eeg_aoi`, gaze sits on `gaze_aoi`.
TrialBundle scripted_trial(const AoiLayout& layout, AoiId eeg_aoi, std::optional<AoiId> gaze_aoi, int reps = 3) {
  TrialBundle b;
  b.trial = 1;
  b.start_us = 0;
  TimestampUs t = 0;
  for (int r = 0; r < reps; ++r) {
    for (const auto& a : layout.aois) {
      b.events.push_back({t, 1, a.id, a.id == eeg_aoi});
      b.features.push_back({a.id == eeg_aoi ? 2.0 : -2.0});
      t += 175000;
    }
  }
  b.end_us = t;
  if (gaze_aoi) {
    const Point c = layout.at(*gaze_aoi).rect.center();
    for (TimestampUs g = 0; g < t; g += 16667) {
      GazeSample s;
      s.t = g;
      s.left = c;
      s.right = c;
      b.gaze.push_back(s);
    }
  }
  b.target_aoi = eeg_aoi;
  return b;
}

}  // namespace

TEST_CASE("fusion examples") {
  FusionConfig cfg;
  const std::vector<double> eeg{0.6, 0.3, 0.1};
  const std::vector<double> et{0.2, 0.9, 0.0};

  const auto d = fuse(eeg, et, cfg);
  CHECK(d.chosen_aoi == 2);
  CHECK(d.mode == DecisionMode::Fused);
  CHECK(d.rank_inspected == 2);
  CHECK(d.c_eeg == eeg);
  CHECK(d.c_et == et);

  SUBCASE("threshold zero reduces to the EEG argmax") {
    cfg.threshold = 0.0;
    const auto z = fuse(eeg, et, cfg);
    CHECK(z.chosen_aoi == 1);
    CHECK(z.rank_inspected == 1);
    CHECK(z.mode == DecisionMode::Fused);
  }
  SUBCASE("no gaze support falls back to the EEG winner") {
    const std::vector<double> weak{0.3, 0.3, 0.3};
    const auto f = fuse(eeg, weak, cfg);
    CHECK(f.chosen_aoi == 1);
    CHECK(f.mode == DecisionMode::FallbackEeg);
    CHECK(f.rank_inspected == 3);
  }
  SUBCASE("reject policy") {
    cfg.fallback = FallbackPolicy::Reject;
    const std::vector<double> weak{0.3, 0.3, 0.3};
    const auto f = fuse(eeg, weak, cfg);
    CHECK_FALSE(f.chosen_aoi.has_value());
    CHECK(f.mode == DecisionMode::Rejected);
    CHECK(f.rank_inspected == 3);
  }
  SUBCASE("EEG ties go to the lower id") {
    cfg.threshold = 0.0;
    const std::vector<double> tied{0.2, 0.5, 0.5};
    CHECK(fuse(tied, et, cfg).chosen_aoi == 2);
    CHECK(rank_descending(tied) == std::vector<AoiId>{2, 3, 1});
  }
}

TEST_CASE("fusion input errors") {
  FusionConfig cfg;
  const std::vector<double> three{0.1, 0.2, 0.3};
  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(fuse(three, two, cfg), LengthMismatchError);
  cfg.threshold = 1.01;
  CHECK_THROWS_AS(fuse(three, three, cfg), ConfigError);
  cfg.threshold = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("fusion properties") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> kdist(2, 9);
  for (int i = 0; i < 1000; ++i) {
    const auto k = static_cast<std::size_t>(kdist(rng));
    std::vector<double> eeg(k), et(k);
    for (auto& v : eeg) v = u(rng);
    for (auto& v : et) v = u(rng);
    FusionConfig cfg;
    cfg.threshold = u(rng);
    const auto d = fuse(eeg, et, cfg);

    // deterministic
    CHECK(fuse(eeg, et, cfg) == d);
    CHECK(d.rank_inspected >= 1);
    CHECK(d.rank_inspected <= static_cast<int>(k));
    if (d.mode == DecisionMode::Fused) {
      CHECK(et[static_cast<std::size_t>(*d.chosen_aoi - 1)] >= cfg.threshold);
      // no AOI ranked above the chosen one met the threshold
      for (AoiId id : rank_descending(eeg)) {
        if (id == *d.chosen_aoi) break;
        CHECK(et[static_cast<std::size_t>(id - 1)] < cfg.threshold);
      }
    } else {
      CHECK(d.chosen_aoi == argmax_id(eeg));
    }

    // invariant under a strictly increasing transform of the EEG scores
    std::vector<double> warped(k);
    for (std::size_t j = 0; j < k; ++j) warped[j] = std::exp(3 * eeg[j]) - 7;
    const auto w = fuse(warped, et, cfg);
    CHECK(w.chosen_aoi == d.chosen_aoi);
    CHECK(w.rank_inspected == d.rank_inspected);

    // a stricter threshold never inspects fewer candidates
    FusionConfig strict = cfg;
    strict.threshold = cfg.threshold + (1 - cfg.threshold) * u(rng);
    CHECK(fuse(eeg, et, strict).rank_inspected >= d.rank_inspected);
  }
}

TEST_CASE("classify_trial end to end") {
  const AoiLayout layout = default_layout();
  const GnbModel model = unit_model();
  FusionConfig cfg;

  SUBCASE("EEG and gaze agree") {
    const auto d = classify_trial(scripted_trial(layout, 4, 4), model, layout, cfg);
    CHECK(d.chosen_aoi == 4);
    CHECK(d.mode == DecisionMode::Fused);
    CHECK(d.c_et[3] == doctest::Approx(1.0));
    CHECK(argmax_id(d.c_eeg) == 4);
  }
  SUBCASE("gaze overrides the EEG ranking when only AOI j has gaze support") {
    const auto d = classify_trial(scripted_trial(layout, 4, 6), model, layout, cfg);
    CHECK(d.chosen_aoi == 6);
    CHECK(d.mode == DecisionMode::Fused);
    CHECK(d.rank_inspected > 1);
  }
  SUBCASE("no valid gaze") {
    const auto b = scripted_trial(layout, 4, std::nullopt);
    CHECK_THROWS_AS(classify_trial(b, model, layout, cfg), EmptyTrialError);
    const auto d = decide_trial(b, model, layout, cfg);
    CHECK(d.mode == DecisionMode::Rejected);
    CHECK_FALSE(d.chosen_aoi.has_value());
    CHECK(argmax_id(d.c_eeg) == 4);
  }
  SUBCASE("feature rows must match events") {
    auto b = scripted_trial(layout, 4, 4);
    b.features.pop_back();
    CHECK_THROWS_AS(classify_trial(b, model, layout, cfg), CrossRefError);
  }
  SUBCASE("literal confidences never exceed one half") {
    cfg.eeg_mode = ConfidenceMode::Literal;
    const auto s = score_trial_eeg(scripted_trial(layout, 2, 2), model, layout.size(), cfg);
    for (double v : s.scores) CHECK(v <= 0.5);
  }
}
