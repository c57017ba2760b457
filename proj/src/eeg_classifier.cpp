#include "hybridfuse/eeg_classifier.hpp"

#include "hybridfuse/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hybridfuse {

int FeatureConfig::samples_per_epoch() const {
  return static_cast<int>(std::floor((window_end_ms - window_start_ms) * sample_rate_hz / 1000.0));
}

Epoch::Epoch(int channels, int samples)
    : Epoch(channels, samples,
            std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)) *
                                static_cast<std::size_t>(std::max(samples, 0)))) {}

Epoch::Epoch(int channels, int samples, std::vector<double> data)
    : channels_(channels), samples_(samples), data_(std::move(data)) {
  if (channels < 1 || samples < 1) throw ShapeError("epoch needs at least one channel and one sample");
  if (data_.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(samples)) {
    throw ShapeError("epoch data size does not match channels x samples");
  }
}

std::span<const double> Epoch::channel(int c) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * samples_, samples_);
}

std::span<double> Epoch::channel(int c) {
  return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * samples_, samples_);
}

FeatureVector extract_features(const Epoch& epoch, const FeatureConfig& cfg) {
  const int n = cfg.samples_per_epoch();
  const int m = cfg.blocks_per_channel;
  if (epoch.channels() != cfg.channels) {
    throw ShapeError("epoch has " + std::to_string(epoch.channels()) + " channels, expected " +
                     std::to_string(cfg.channels));
  }
  if (epoch.samples() != n) {
    throw ShapeError("epoch has " + std::to_string(epoch.samples()) + " samples, expected " + std::to_string(n));
  }
  if (m < 1 || m > n) throw ShapeError("blocks per channel must lie in [1, samples]");

  FeatureVector out;
  out.reserve(static_cast<std::size_t>(cfg.dimension()));
  for (int c = 0; c < epoch.channels(); ++c) {
    const auto x = epoch.channel(c);
    for (int b = 0; b < m; ++b) {
      // block b covers [floor(b*n/m), floor((b+1)*n/m))
      const std::size_t lo = static_cast<std::size_t>(b) * n / m;
      const std::size_t hi = static_cast<std::size_t>(b + 1) * n / m;
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) sum += x[i];
      out.push_back(sum / static_cast<double>(hi - lo));
    }
  }
  return out;
}

FeatureVector Standardization::apply(std::span<const double> x) const {
  if (empty()) return FeatureVector(x.begin(), x.end());
  if (x.size() != mean.size()) throw DimensionError("feature dimension does not match standardization");
  FeatureVector z(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) z[d] = (x[d] - mean[d]) / scale[d];
  return z;
}

namespace {

// Welford accumulator over a fixed dimension.
struct RunningMoments {
  explicit RunningMoments(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

  void push(std::span<const double> x) {
    ++count;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double delta = x[d] - mean[d];
      mean[d] += delta / static_cast<double>(count);
      m2[d] += delta * (x[d] - mean[d]);
    }
  }

  std::vector<double> population_variance() const {
    std::vector<double> v(m2.size());
    for (std::size_t d = 0; d < m2.size(); ++d) v[d] = m2[d] / static_cast<double>(count);
    return v;
  }

  std::size_t count{0};
  std::vector<double> mean;
  std::vector<double> m2;
};

}  // namespace

GnbModel train_gnb(std::span<const LabeledFeature> data, std::optional<std::array<double, 2>> priors,
                   const TrainOptions& options) {
  if (data.empty()) throw ClassMissingError("no training data");
  const std::size_t dim = data.front().values.size();
  if (dim == 0) throw DimensionError("feature vectors are empty");
  for (const auto& f : data) {
    if (f.values.size() != dim) throw DimensionError("training vectors have inconsistent dimensions");
    for (double v : f.values) {
      if (!std::isfinite(v)) throw DimensionError("training vectors must be finite");
    }
  }

  GnbModel model;
  model.feature_config = options.feature_config;

  if (options.standardize) {
    RunningMoments all(dim);
    for (const auto& f : data) all.push(f.values);
    model.standardization.mean = all.mean;
    model.standardization.scale = all.population_variance();
    for (double& s : model.standardization.scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
  }

  std::array<RunningMoments, 2> moments{RunningMoments(dim), RunningMoments(dim)};
  for (const auto& f : data) {
    moments[f.is_target ? 0 : 1].push(model.standardization.apply(f.values));
  }
  for (int c = 0; c < 2; ++c) {
    if (moments[c].count < 2) {
      throw ClassMissingError(std::string(c == 0 ? "target" : "non-target") +
                              " class needs at least 2 training samples");
    }
    model.means[c] = moments[c].mean;
    model.variances[c] = moments[c].population_variance();
    for (double& v : model.variances[c]) v = std::max(v, options.variance_floor);
  }

  if (priors) {
    const auto [p1, p2] = *priors;
    if (!(p1 > 0.0 && p2 > 0.0) || std::abs(p1 + p2 - 1.0) > 1e-12) {
      throw std::invalid_argument("priors must be positive and sum to 1");
    }
    model.priors = *priors;
  } else {
    const double n = static_cast<double>(data.size());
    model.priors = {static_cast<double>(moments[0].count) / n, static_cast<double>(moments[1].count) / n};
  }
  return model;
}

ScorePair bayes_scores(const GnbModel& model, std::span<const double> x) {
  const std::size_t dim = model.dimension();
  if (x.size() != dim) {
    throw DimensionError("feature vector has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(dim));
  }
  const FeatureVector z = model.standardization.apply(x);
  std::array<double, 2> log_score{};
  for (int c = 0; c < 2; ++c) {
    double acc = std::log(model.priors[c]);
    const auto& mu = model.means[c];
    const auto& var = model.variances[c];
    for (std::size_t d = 0; d < dim; ++d) {
      const double r = z[d] - mu[d];
      acc -= 0.5 * (std::log(2.0 * std::numbers::pi * var[d]) + r * r / var[d]);
    }
    log_score[c] = acc;
  }
  return {log_score[0], log_score[1]};
}

namespace {

// 1 / (1 + exp(-x)) without overflow.
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double target_confidence(const ScorePair& s, ConfidenceMode mode) {
  const double diff = s.log_target - s.log_nontarget;
  switch (mode) {
    case ConfidenceMode::Literal:
      // min(S1,S2)/(S1+S2)
      return logistic(-std::abs(diff));
    case ConfidenceMode::Posterior:
      return logistic(diff);
  }
  return 0.0;
}

TrialEegScores aggregate_trial(std::span<const EventScore> events, std::size_t aoi_count, AggregationMode mode) {
  std::vector<double> acc(aoi_count, 0.0);
  std::vector<std::size_t> counts(aoi_count, 0);
  for (const EventScore& e : events) {
    if (e.aoi_id < 1 || static_cast<std::size_t>(e.aoi_id) > aoi_count) {
      throw MissingAoiError("event references unknown AOI " + std::to_string(e.aoi_id));
    }
    const std::size_t k = static_cast<std::size_t>(e.aoi_id - 1);
    acc[k] += mode == AggregationMode::Mean ? e.confidence : e.scores.log_target - e.scores.log_nontarget;
    ++counts[k];
  }

  TrialEegScores out;
  out.events.assign(events.begin(), events.end());
  out.scores.resize(aoi_count);
  for (std::size_t k = 0; k < aoi_count; ++k) {
    if (counts[k] == 0) throw MissingAoiError("AOI " + std::to_string(k + 1) + " has no events in trial");
    out.scores[k] = mode == AggregationMode::Mean ? acc[k] / static_cast<double>(counts[k]) : logistic(acc[k]);
  }
  return out;
}

}  // namespace hybridfuse
