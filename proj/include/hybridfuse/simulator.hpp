#pragma once

#include "hybridfuse/core.hpp"
#include "hybridfuse/session_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace hybridfuse {

using Rng = std::mt19937_64;

struct SimConfig {
  int subjects{5};
  int trials{9};
  int aoi_count{7};
  int repetitions{10};
  double gaze_sigma_px{40.0};
  double p_on_target{0.9};
  double eeg_separation{3.0};  // distance between class means, in noise SDs
  int feature_dim{192};
  double pupil_baseline_mm{3.1552};
  double pupil_elevation_mm{0.1393};
  double pupil_noise_mm{0.05};
  double dropout{0.02};       // per-eye probability that the tracker loses the eye
  double eye_jitter_px{0.5};  // per-eye deviation from the binocular point
  double intertrial_gaze_sigma_px{150.0};
  double gaze_hz{60.0};
  double eeg_hz{256.0};
  int flash_ms{100};
  int isi_ms{75};
  int intertrial_ms{4000};
  int screen_w{1920};
  int screen_h{1080};
  bool labeled{true};
  std::uint64_t seed{1};

  // Throws ConfigError when an invariant is violated.
  void validate() const;
  TimestampUs trial_duration_us() const;
  TimestampUs flash_period_us() const { return static_cast<TimestampUs>(flash_ms + isi_ms) * 1000; }
};

// Stable seed derivation so subjects and trials can be generated independently.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct SequenceResult {
  std::vector<AoiId> ids;
  bool constraint_dropped{false};  // adjacent-repeat constraint not enforced (K = 2)
};

// Oddball flash order: R shuffled blocks of all K ids, repaired at block
// boundaries so the same AOI never flashes twice in a row when K >= 3.
SequenceResult make_sequence(int aoi_count, int repetitions, std::uint64_t seed);

// Per-trial overrides used by scripted scenarios.
struct TrialScript {
  AoiId target{1};
  std::optional<AoiId> attended;  // where gaze and P300 actually go; defaults to target
  std::optional<double> p_on_target;
  std::optional<double> gaze_sigma_px;
  std::optional<double> eeg_separation;
};

// Feature vector drawn from N(+d/2 u, I) for attended flashes and N(-d/2 u, I)
// otherwise, u = (1, ..., 1)/sqrt(D).
FeatureVector synth_features(bool attended, double separation, int dim, Rng& rng);

// Gaze timestamps of the global sampling grid round(i * 1e6 / hz) within [start, end).
std::vector<TimestampUs> sample_grid(TimestampUs start, TimestampUs end, double hz);

TrialBundle synth_trial(const TrialScript& script, int trial, TimestampUs start_us, const SimConfig& cfg,
                        const AoiLayout& layout, Rng& rng);

// Single trial starting at t = 0.
TrialBundle synth_trial(AoiId target, const SimConfig& cfg, const AoiLayout& layout, std::uint64_t seed);

// One subject's session in memory. With no scripts, targets are drawn
// uniformly; otherwise scripts.size() overrides cfg.trials.
Session synth_subject(const SimConfig& cfg, int subject_index, std::span<const TrialScript> scripts = {});

// Writes one session directory per subject under `root`; returns them in order.
std::vector<std::filesystem::path> synth_session(const SimConfig& cfg, const std::filesystem::path& root);

AoiLayout sim_layout(const SimConfig& cfg);

}  // namespace hybridfuse
