#pragma once

#include "hybridfuse/core.hpp"
#include "hybridfuse/eeg_classifier.hpp"
#include "hybridfuse/fusion.hpp"
#include "hybridfuse/gaze_analytics.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hybridfuse {

inline constexpr int kFormatVersion = 1;

// Session directory layout:
//
//   manifest.json  {"version":1, session_id, subject, screen_w, screen_h,
//                   gaze_hz, eeg_hz, feature_dim, trial_windows[],
//                   ground_truth[]?, files{gaze,events,features,layout}}
//   layout.json    {"version":1, screen_w, screen_h, aois[{id,word,x,y,w,h}]}
//   gaze.csv       t_us,lx_px,ly_px,rx_px,ry_px,lpupil_mm,rpupil_mm,lvalid,rvalid
//   events.csv     t_us,trial,aoi_id,is_target
//   features.csv   trial,event_idx,aoi_id,f_0..f_{D-1}
//
// Absent values are empty CSV fields; reals use 17 significant digits.

struct TrialWindowRecord {
  int trial{1};
  TimestampUs start_us{0};
  TimestampUs end_us{0};

  friend bool operator==(const TrialWindowRecord&, const TrialWindowRecord&) = default;
};

struct SessionFiles {
  std::string gaze{"gaze.csv"};
  std::string events{"events.csv"};
  std::string features{"features.csv"};
  std::string layout{"layout.json"};

  friend bool operator==(const SessionFiles&, const SessionFiles&) = default;
};

struct SessionManifest {
  std::string session_id;
  std::string subject;
  int screen_w{1920};
  int screen_h{1080};
  double gaze_hz{60.0};
  double eeg_hz{256.0};
  int feature_dim{0};
  std::vector<TrialWindowRecord> trial_windows;
  std::optional<std::vector<std::pair<int, AoiId>>> ground_truth;
  SessionFiles files;

  friend bool operator==(const SessionManifest&, const SessionManifest&) = default;
};

struct Session {
  SessionManifest manifest;
  AoiLayout layout;
  std::vector<TrialBundle> trials;
  std::vector<GazeSample> intertrial_gaze;  // samples outside every trial window

  std::vector<GazeSample> all_gaze() const;  // merged by timestamp
  std::vector<TimeWindow> windows() const;

  friend bool operator==(const Session&, const Session&) = default;
};

struct LoadResult {
  Session session;
  std::vector<std::string> warnings;
};

// Throws SchemaError, CrossRefError, MonotonicityError or IoError.
LoadResult load_session(const std::filesystem::path& dir);

// Rewrites the manifest's windows, ground truth, screen size and feature
// dimension from the session contents before writing. Throws IoError.
void save_session(const Session& session, const std::filesystem::path& dir);

// True if `dir` holds a manifest.json.
bool is_session_dir(const std::filesystem::path& dir);

// Session directories directly under `root` (or `root` itself), sorted.
std::vector<std::filesystem::path> find_sessions(const std::filesystem::path& root);

// Model file: {"version":1, D, priors, means, variances, feature_config,
// standardization}.
std::string model_to_json(const GnbModel& model);
GnbModel model_from_json(const std::string& text);
void save_model(const GnbModel& model, const std::filesystem::path& path);
GnbModel load_model(const std::filesystem::path& path);

std::string layout_to_json(const AoiLayout& layout);
AoiLayout layout_from_json(const std::string& text);

// Labeled training vectors of a session. Throws SchemaError when an event
// carries no is_target label.
std::vector<LabeledFeature> labeled_features(const Session& session);

struct TrialAnalytics {
  int trial{1};
  std::optional<Point> centroid;
  std::optional<ConfidenceEllipse> ellipse;
};

struct SessionAnalytics {
  AoiLayout layout;
  std::vector<TrialAnalytics> trials;
  std::optional<PupilSummary> pupil;
  HeatmapGrid heatmap;
};

struct AnalyticsOptions {
  double coverage{0.95};
  double heatmap_bin{10.0};
  double heatmap_sigma{kDefaultHeatmapSigma};
};

// Per-trial centroid/ellipse (left empty when the trial lacks data), the
// session pupil summary, and a heatmap of all in-trial gaze.
SessionAnalytics analyze_session(const Session& session, const AnalyticsOptions& options = {});

struct TrialDecisionRecord {
  int trial{1};
  std::optional<AoiId> truth;
  FusionDecision decision;
};

struct ReportSummary {
  std::size_t trials{0};
  std::size_t scored{0};  // trials with known truth
  std::size_t correct{0};

  double accuracy() const { return scored == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(scored); }
  std::string text() const;
};

ReportSummary summarize(std::span<const TrialDecisionRecord> decisions);

// Writes decisions.csv, scores_et.csv, scores_eeg.csv, scores_eeg_log10.csv,
// ellipse.csv, pupil.csv, heatmap.csv, overlay.svg and summary.txt.
// Throws std::invalid_argument on empty decisions and IoError on write failure.
ReportSummary export_report(std::span<const TrialDecisionRecord> decisions, const SessionAnalytics& analytics,
                            const std::filesystem::path& dir);

// Fixed 17-significant-digit rendering used by every file writer.
std::string format_real(double v);

}  // namespace hybridfuse
