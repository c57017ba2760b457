#include "hybridfuse/gaze_analytics.hpp"

#include "hybridfuse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hybridfuse {

double EtConfidence::sum() const { return std::accumulate(scores.begin(), scores.end(), 0.0); }

EtConfidence aoi_confidences(std::span<const GazeSample> gaze, const AoiLayout& layout,
                             EtDenominator denominator) {
  EtConfidence out;
  std::vector<std::size_t> counts(layout.size(), 0);
  for (const GazeSample& s : gaze) {
    const auto p = mono_point(s);
    if (!p) {
      ++out.n_invalid;
      continue;
    }
    if (denominator == EtDenominator::OnScreen &&
        !(p->x >= 0.0 && p->x < layout.screen_w && p->y >= 0.0 && p->y < layout.screen_h)) {
      continue;
    }
    ++out.n_used;
    if (const auto id = hit_aoi(*p, layout)) ++counts[static_cast<std::size_t>(*id - 1)];
  }
  if (out.n_used == 0) throw EmptyTrialError("no valid gaze points in trial");

  out.scores.reserve(counts.size());
  for (std::size_t c : counts) out.scores.push_back(static_cast<double>(c) / static_cast<double>(out.n_used));
  return out;
}

Point centroid(std::span<const GazeSample> gaze) {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (const GazeSample& s : gaze) {
    if (const auto p = mono_point(s)) {
      sx += p->x;
      sy += p->y;
      ++n;
    }
  }
  if (n == 0) throw EmptyTrialError("no valid gaze points for centroid");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

bool ConfidenceEllipse::contains(Point p) const {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  const double u = (c * dx + s * dy) / semi_major;
  const double v = (-s * dx + c * dy) / semi_minor;
  return u * u + v * v <= 1.0;
}

double chi_square2_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("coverage must lie in (0, 1)");
  auto cdf = [](double q) { return -std::expm1(-q / 2.0); };
  double lo = 0.0;
  double hi = 1.0;
  while (cdf(hi) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ConfidenceEllipse confidence_ellipse(std::span<const Point> points, double coverage) {
  const std::size_t n = points.size();
  if (n < 3) throw InsufficientDataError("confidence ellipse needs at least 3 valid points");
  const double q = chi_square2_quantile(coverage);

  double mx = 0.0;
  double my = 0.0;
  for (const Point& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const Point& p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double denom = static_cast<double>(n - 1);
  sxx /= denom;
  syy /= denom;
  sxy /= denom;

  // closed-form eigenvalues of the symmetric 2x2 covariance
  const double half_trace = 0.5 * (sxx + syy);
  const double radius = std::hypot(0.5 * (sxx - syy), sxy);
  const double l1 = half_trace + radius;
  const double l2 = half_trace - radius;
  if (!(l1 > 0.0) || l2 <= 1e-12 * l1) throw DegenerateError("gaze covariance is rank-deficient");

  ConfidenceEllipse e;
  e.center = {mx, my};
  e.semi_major = std::sqrt(q * l1);
  e.semi_minor = std::sqrt(q * l2);
  e.orientation = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  e.area = std::numbers::pi * e.semi_major * e.semi_minor;
  e.coverage = coverage;
  return e;
}

ConfidenceEllipse confidence_ellipse(std::span<const GazeSample> gaze, double coverage) {
  std::vector<Point> points;
  points.reserve(gaze.size());
  for (const GazeSample& s : gaze) {
    if (const auto p = mono_point(s)) points.push_back(*p);
  }
  return confidence_ellipse(std::span<const Point>(points), coverage);
}

double HeatmapGrid::total_mass() const { return std::accumulate(density.begin(), density.end(), 0.0); }

namespace {

std::vector<double> gaussian_kernel(double sigma_bins) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_bins));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i / sigma_bins) * (i / sigma_bins));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// Separable convolution with zero padding; mass falling off the grid is lost.
void convolve_separable(HeatmapGrid& g, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(g.density.size(), 0.0);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const double v = g.at(c, r);
      if (v == 0.0) continue;
      for (int i = -radius; i <= radius; ++i) {
        const int cc = c + i;
        if (cc < 0 || cc >= g.cols) continue;
        tmp[static_cast<std::size_t>(r * g.cols + cc)] += v * kernel[static_cast<std::size_t>(i + radius)];
      }
    }
  }
  std::fill(g.density.begin(), g.density.end(), 0.0);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const double v = tmp[static_cast<std::size_t>(r * g.cols + c)];
      if (v == 0.0) continue;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = r + i;
        if (rr < 0 || rr >= g.rows) continue;
        g.density[static_cast<std::size_t>(rr * g.cols + c)] += v * kernel[static_cast<std::size_t>(i + radius)];
      }
    }
  }
}

}  // namespace

HeatmapGrid heatmap(std::span<const GazeSample> gaze, int screen_w, int screen_h, double bin,
                    double smooth_sigma) {
  if (!(bin >= 1.0)) throw std::invalid_argument("heatmap bin must be >= 1 px");
  if (screen_w <= 0 || screen_h <= 0) throw std::invalid_argument("screen size must be positive");
  HeatmapGrid g;
  g.bin = bin;
  g.cols = static_cast<int>(std::ceil(screen_w / bin));
  g.rows = static_cast<int>(std::ceil(screen_h / bin));
  g.density.assign(static_cast<std::size_t>(g.cols) * static_cast<std::size_t>(g.rows), 0.0);

  for (const GazeSample& s : gaze) {
    const auto p = mono_point(s);
    if (!p || p->x < 0.0 || p->y < 0.0 || p->x >= screen_w || p->y >= screen_h) continue;
    const int c = std::min(g.cols - 1, static_cast<int>(p->x / bin));
    const int r = std::min(g.rows - 1, static_cast<int>(p->y / bin));
    g.density[static_cast<std::size_t>(r * g.cols + c)] += 1.0;
  }
  if (smooth_sigma > 0.0) convolve_separable(g, gaussian_kernel(smooth_sigma / bin));
  return g;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("median of empty set");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

PupilSummary pupil_summary(std::span<const GazeSample> samples, std::span<const TimeWindow> trial_windows) {
  for (std::size_t i = 0; i < trial_windows.size(); ++i) {
    if (trial_windows[i].end <= trial_windows[i].start ||
        (i > 0 && trial_windows[i].start < trial_windows[i - 1].end)) {
      throw std::invalid_argument("trial windows must be non-empty, disjoint and sorted");
    }
  }

  std::vector<double> in_trial;
  std::vector<double> between;
  std::vector<std::vector<double>> per_window(trial_windows.size());
  for (const GazeSample& s : samples) {
    const auto pupil = mono_pupil(s);
    if (!pupil) continue;
    const auto it = std::upper_bound(trial_windows.begin(), trial_windows.end(), s.t,
                                     [](TimestampUs t, const TimeWindow& w) { return t < w.start; });
    if (it != trial_windows.begin() && s.t < std::prev(it)->end) {
      in_trial.push_back(*pupil);
      per_window[static_cast<std::size_t>(std::prev(it) - trial_windows.begin())].push_back(*pupil);
    } else {
      between.push_back(*pupil);
    }
  }
  if (in_trial.empty()) throw NoPupilDataError("no pupil samples inside trial windows");
  if (between.empty()) throw NoPupilDataError("no pupil samples between trials");

  PupilSummary out;
  out.trial_median = lower_median(in_trial);
  out.trial_sd = sample_sd(in_trial);
  out.intertrial_median = lower_median(between);
  out.intertrial_sd = sample_sd(between);
  for (auto& w : per_window) {
    out.per_trial_medians.push_back(w.empty() ? std::nullopt : std::optional<double>(lower_median(std::move(w))));
  }
  return out;
}

}  // namespace hybridfuse
