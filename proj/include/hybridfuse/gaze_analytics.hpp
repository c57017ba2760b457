#pragma once

#include "hybridfuse/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace hybridfuse {

// Which samples make up the denominator of the per-AOI gaze ratio.
enum class EtDenominator {
  AllValid,  // every sample with a detected eye, off-screen ones included
  OnScreen,  // only detected samples that land on the screen
};

// Per-AOI gaze ratio C_ET(k) = n_k / N_total for one trial.
struct EtConfidence {
  std::vector<double> scores;  // index k-1 holds AOI k
  std::size_t n_used{0};
  std::size_t n_invalid{0};

  double sum() const;
};

// Throws EmptyTrialError when no sample qualifies for the denominator.
EtConfidence aoi_confidences(std::span<const GazeSample> gaze, const AoiLayout& layout,
                             EtDenominator denominator = EtDenominator::AllValid);

// Mean of the monocular gaze points. Throws EmptyTrialError.
Point centroid(std::span<const GazeSample> gaze);

struct ConfidenceEllipse {
  Point center;
  double semi_major{0.0};
  double semi_minor{0.0};
  double orientation{0.0};  // radians, major axis vs +x
  double area{0.0};
  double coverage{0.95};

  bool contains(Point p) const;
};

// Quantile of the chi-square distribution with 2 degrees of freedom,
// found by bisection on its CDF 1 - exp(-q/2).
double chi_square2_quantile(double p);

// Gaussian coverage ellipse of the gaze scatter. Needs >= 3 valid samples
// (InsufficientDataError) and a full-rank covariance (DegenerateError).
ConfidenceEllipse confidence_ellipse(std::span<const GazeSample> gaze, double coverage = 0.95);
ConfidenceEllipse confidence_ellipse(std::span<const Point> points, double coverage = 0.95);

struct HeatmapGrid {
  double bin{10.0};
  int cols{0};
  int rows{0};
  std::vector<double> density;  // row-major, rows x cols

  double at(int col, int row) const { return density[static_cast<std::size_t>(row * cols + col)]; }
  double total_mass() const;
};

inline constexpr double kDefaultHeatmapSigma = 20.0;

// 2-D histogram of the gaze points over the screen, optionally smoothed by a
// Gaussian truncated at 3 sigma. smooth_sigma <= 0 disables smoothing.
HeatmapGrid heatmap(std::span<const GazeSample> gaze, int screen_w, int screen_h, double bin,
                    double smooth_sigma = kDefaultHeatmapSigma);

struct TimeWindow {
  TimestampUs start{0};  // inclusive
  TimestampUs end{0};    // exclusive
};

struct PupilSummary {
  double trial_median{0.0};
  double trial_sd{0.0};
  double intertrial_median{0.0};
  double intertrial_sd{0.0};
  std::vector<std::optional<double>> per_trial_medians;  // one per window
};

// Lower-middle median. Throws InsufficientDataError on empty input.
double lower_median(std::vector<double> values);
double sample_sd(std::span<const double> values);

// Pupil statistics inside vs outside the trial windows. Throws
// NoPupilDataError when either partition has no pupil samples.
PupilSummary pupil_summary(std::span<const GazeSample> samples, std::span<const TimeWindow> trial_windows);

}  // namespace hybridfuse
