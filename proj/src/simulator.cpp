#include "hybridfuse/simulator.hpp"

#include "hybridfuse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hybridfuse {

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid simulation config: " + what); };
  if (subjects < 1) fail("subjects must be >= 1");
  if (trials < 1) fail("trials per subject must be >= 1");
  if (aoi_count < 2) fail("AOI count must be >= 2");
  if (repetitions < 1) fail("repetitions must be >= 1");
  if (!(gaze_sigma_px > 0.0)) fail("gaze sigma must be > 0");
  if (!(p_on_target >= 0.0 && p_on_target <= 1.0)) fail("on-target probability must lie in [0, 1]");
  if (!(eeg_separation >= 0.0)) fail("EEG separation must be >= 0");
  if (feature_dim < 1) fail("feature dimension must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(eye_jitter_px >= 0.0) || !(intertrial_gaze_sigma_px > 0.0)) fail("gaze spreads must be non-negative");
  if (!(gaze_hz > 0.0) || !(eeg_hz > 0.0)) fail("sample rates must be > 0");
  if (flash_ms < 1 || isi_ms < 0 || intertrial_ms < 1) fail("timing values out of range");
  if (!(pupil_baseline_mm > 0.5) || !(pupil_baseline_mm + pupil_elevation_mm < 9.5) ||
      !(pupil_baseline_mm + pupil_elevation_mm > 0.5) || !(pupil_noise_mm >= 0.0)) {
    fail("pupil parameters out of range");
  }
  if (screen_w < 1 || screen_h < 1) fail("screen size must be positive");
}

TimestampUs SimConfig::trial_duration_us() const {
  return static_cast<TimestampUs>(aoi_count) * repetitions * flash_period_us();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

SequenceResult make_sequence(int aoi_count, int repetitions, std::uint64_t seed) {
  if (aoi_count < 2 || repetitions < 1) throw ConfigError("sequence needs K >= 2 and R >= 1");
  Rng rng(seed);
  SequenceResult out;
  out.constraint_dropped = aoi_count == 2;
  out.ids.reserve(static_cast<std::size_t>(aoi_count) * repetitions);

  std::vector<AoiId> block(static_cast<std::size_t>(aoi_count));
  for (int r = 0; r < repetitions; ++r) {
    for (int k = 0; k < aoi_count; ++k) block[static_cast<std::size_t>(k)] = k + 1;
    std::shuffle(block.begin(), block.end(), rng);
    if (!out.constraint_dropped && !out.ids.empty() && block.front() == out.ids.back()) {
      // the repeated id appears only once per block, so any other slot fixes it
      std::uniform_int_distribution<std::size_t> pick(1, block.size() - 1);
      std::swap(block.front(), block[pick(rng)]);
    }
    out.ids.insert(out.ids.end(), block.begin(), block.end());
  }
  return out;
}

FeatureVector synth_features(bool attended, double separation, int dim, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double shift = (attended ? 0.5 : -0.5) * separation / std::sqrt(static_cast<double>(dim));
  FeatureVector f(static_cast<std::size_t>(dim));
  for (double& v : f) v = shift + noise(rng);
  return f;
}

std::vector<TimestampUs> sample_grid(TimestampUs start, TimestampUs end, double hz) {
  const double period = 1e6 / hz;
  auto first = static_cast<std::int64_t>(std::ceil(static_cast<double>(start) / period));
  while (first > 0 && std::llround((first - 1) * period) >= start) --first;
  while (std::llround(first * period) < start) ++first;
  std::vector<TimestampUs> out;
  for (std::int64_t i = first;; ++i) {
    const TimestampUs t = std::llround(i * period);
    if (t >= end) break;
    out.push_back(t);
  }
  return out;
}

namespace {

GazeSample make_sample(TimestampUs t, Point p, double pupil, const SimConfig& cfg, Rng& rng) {
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::normal_distribution<double> pupil_noise(0.0, 1.0);
  std::bernoulli_distribution lost(cfg.dropout);
  GazeSample s;
  s.t = t;
  auto clamp_pupil = [](double v) { return std::clamp(v, 0.05, 9.95); };
  if (!lost(rng)) {
    s.left = Point{p.x + cfg.eye_jitter_px * jitter(rng), p.y + cfg.eye_jitter_px * jitter(rng)};
    s.pupil_left = clamp_pupil(pupil + cfg.pupil_noise_mm * pupil_noise(rng));
  }
  if (!lost(rng)) {
    s.right = Point{p.x + cfg.eye_jitter_px * jitter(rng), p.y + cfg.eye_jitter_px * jitter(rng)};
    s.pupil_right = clamp_pupil(pupil + cfg.pupil_noise_mm * pupil_noise(rng));
  }
  return s;
}

std::string subject_label(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "subject_%02d", index + 1);
  return buf;
}

}  // namespace

AoiLayout sim_layout(const SimConfig& cfg) { return grid_layout(cfg.aoi_count, 4, cfg.screen_w, cfg.screen_h); }

TrialBundle synth_trial(const TrialScript& script, int trial, TimestampUs start_us, const SimConfig& cfg,
                        const AoiLayout& layout, Rng& rng) {
  const Aoi& target = layout.at(script.target);
  const Aoi& attended = layout.at(script.attended.value_or(script.target));
  const double p = script.p_on_target.value_or(cfg.p_on_target);
  const double sigma = script.gaze_sigma_px.value_or(cfg.gaze_sigma_px);
  const double d = script.eeg_separation.value_or(cfg.eeg_separation);
  const auto K = static_cast<int>(layout.size());

  TrialBundle b;
  b.trial = trial;
  b.start_us = start_us;
  b.end_us = start_us + static_cast<TimestampUs>(K) * cfg.repetitions * cfg.flash_period_us();
  b.target_aoi = target.id;

  const Point focus = attended.rect.center();
  std::normal_distribution<double> around(0.0, sigma);
  std::uniform_real_distribution<double> ux(0.0, cfg.screen_w);
  std::uniform_real_distribution<double> uy(0.0, cfg.screen_h);
  std::bernoulli_distribution on_target(p);
  const double pupil = cfg.pupil_baseline_mm + cfg.pupil_elevation_mm;
  for (TimestampUs t : sample_grid(b.start_us, b.end_us, cfg.gaze_hz)) {
    Point pt;
    if (on_target(rng)) {
      pt = {focus.x + around(rng), focus.y + around(rng)};
    } else {
      pt = {ux(rng), uy(rng)};
    }
    b.gaze.push_back(make_sample(t, pt, pupil, cfg, rng));
  }

  const auto sequence = make_sequence(K, cfg.repetitions, rng()).ids;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    StimulusEvent e;
    e.t = start_us + static_cast<TimestampUs>(i) * cfg.flash_period_us();
    e.trial = trial;
    e.aoi_id = sequence[i];
    if (cfg.labeled) e.is_target = e.aoi_id == target.id;
    b.events.push_back(e);
    b.features.push_back(synth_features(e.aoi_id == attended.id, d, cfg.feature_dim, rng));
  }
  return b;
}

TrialBundle synth_trial(AoiId target, const SimConfig& cfg, const AoiLayout& layout, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  TrialScript script;
  script.target = target;
  return synth_trial(script, 1, 0, cfg, layout, rng);
}

Session synth_subject(const SimConfig& cfg, int subject_index, std::span<const TrialScript> scripts) {
  cfg.validate();
  Session s;
  s.layout = validate_layout(sim_layout(cfg));
  s.manifest.session_id = subject_label(subject_index);
  s.manifest.subject = "S" + std::to_string(subject_index + 1);
  s.manifest.screen_w = cfg.screen_w;
  s.manifest.screen_h = cfg.screen_h;
  s.manifest.gaze_hz = cfg.gaze_hz;
  s.manifest.eeg_hz = cfg.eeg_hz;
  s.manifest.feature_dim = cfg.feature_dim;

  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(subject_index)));
  std::vector<TrialScript> plan(scripts.begin(), scripts.end());
  if (plan.empty()) {
    std::uniform_int_distribution<AoiId> pick(1, cfg.aoi_count);
    for (int t = 0; t < cfg.trials; ++t) {
      TrialScript script;
      script.target = pick(rng);
      plan.push_back(script);
    }
  }

  const TimestampUs gap = static_cast<TimestampUs>(cfg.intertrial_ms) * 1000;
  TimestampUs cursor = 0;
  const Point rest{cfg.screen_w / 2.0, cfg.screen_h / 2.0};
  std::normal_distribution<double> wander(0.0, cfg.intertrial_gaze_sigma_px);
  auto fill_intertrial = [&](TimestampUs from, TimestampUs to) {
    for (TimestampUs t : sample_grid(from, to, cfg.gaze_hz)) {
      s.intertrial_gaze.push_back(
          make_sample(t, {rest.x + wander(rng), rest.y + wander(rng)}, cfg.pupil_baseline_mm, cfg, rng));
    }
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    fill_intertrial(cursor, cursor + gap);
    cursor += gap;
    Rng trial_rng(derive_seed(rng(), i));
    s.trials.push_back(synth_trial(plan[i], static_cast<int>(i) + 1, cursor, cfg, s.layout, trial_rng));
    cursor = s.trials.back().end_us;
  }
  fill_intertrial(cursor, cursor + gap);
  return s;
}

std::vector<std::filesystem::path> synth_session(const SimConfig& cfg, const std::filesystem::path& root) {
  cfg.validate();
  std::vector<std::filesystem::path> out;
  for (int i = 0; i < cfg.subjects; ++i) {
    const auto dir = root / subject_label(i);
    save_session(synth_subject(cfg, i), dir);
    out.push_back(dir);
  }
  return out;
}

}  // namespace hybridfuse
