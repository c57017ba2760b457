#pragma once

#include "hybridfuse/core.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace hybridfuse {

// Generic stand-in feature extractor: a fixed post-stimulus window is
// block-averaged down to `blocks_per_channel` values per channel. The
// acquisition filter settings are carried as metadata only.
struct FeatureConfig {
  int channels{16};
  double sample_rate_hz{256.0};
  double window_start_ms{0.0};
  double window_end_ms{800.0};
  int blocks_per_channel{12};
  double bandpass_low_hz{0.1};
  double bandpass_high_hz{30.0};
  double notch_hz{50.0};

  int samples_per_epoch() const;
  int dimension() const { return channels * blocks_per_channel; }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// channels x samples, channel-major.
class Epoch {
public:
  Epoch(int channels, int samples);
  Epoch(int channels, int samples, std::vector<double> data);

  int channels() const { return channels_; }
  int samples() const { return samples_; }
  std::span<const double> channel(int c) const;
  std::span<double> channel(int c);

private:
  int channels_;
  int samples_;
  std::vector<double> data_;
};

// Throws ShapeError when the epoch does not match the configured window.
FeatureVector extract_features(const Epoch& epoch, const FeatureConfig& cfg);

// Per-dimension z-scoring fitted on the training set. Empty = identity.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }
  FeatureVector apply(std::span<const double> x) const;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

inline constexpr double kVarianceFloor = 1e-9;

// Binary diagonal-covariance Gaussian Naive Bayes. Index 0 is the target
// class, index 1 the non-target class.
struct GnbModel {
  std::array<double, 2> priors{0.5, 0.5};
  std::array<std::vector<double>, 2> means;
  std::array<std::vector<double>, 2> variances;
  Standardization standardization;
  FeatureConfig feature_config;

  std::size_t dimension() const { return means[0].size(); }

  friend bool operator==(const GnbModel&, const GnbModel&) = default;
};

struct LabeledFeature {
  FeatureVector values;
  bool is_target{false};
};

struct TrainOptions {
  bool standardize{false};
  double variance_floor{kVarianceFloor};
  FeatureConfig feature_config{};
};

// Population mean/variance per class and dimension. Priors default to the
// empirical class frequencies. Throws ClassMissingError / DimensionError.
GnbModel train_gnb(std::span<const LabeledFeature> data,
                   std::optional<std::array<double, 2>> priors = std::nullopt,
                   const TrainOptions& options = {});

// Log-domain Bayesian scores: log prior + sum of per-dimension log densities.
struct ScorePair {
  double log_target{0.0};
  double log_nontarget{0.0};
};

ScorePair bayes_scores(const GnbModel& model, std::span<const double> x);

enum class ConfidenceMode {
  Literal,    // 1 - max(S1,S2)/(S1+S2)
  Posterior,  // S1/(S1+S2)
};

double target_confidence(const ScorePair& s, ConfidenceMode mode = ConfidenceMode::Literal);

struct EventScore {
  AoiId aoi_id{1};
  ScorePair scores;
  double confidence{0.0};
};

enum class AggregationMode {
  Mean,        // mean event confidence per AOI
  LogOddsSum,  // logistic of the summed log-score differences
};

struct TrialEegScores {
  std::vector<double> scores;  // index k-1 holds AOI k
  std::vector<EventScore> events;
};

// Throws MissingAoiError when an AOI in 1..aoi_count has no events.
TrialEegScores aggregate_trial(std::span<const EventScore> events, std::size_t aoi_count,
                               AggregationMode mode = AggregationMode::Mean);

}  // namespace hybridfuse
