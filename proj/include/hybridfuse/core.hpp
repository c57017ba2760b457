#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hybridfuse {

// All timestamps are integer microseconds.
using TimestampUs = std::int64_t;
using AoiId = int;

struct Point {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point&, const Point&) = default;
};

// One binocular eye-tracker measurement. Absent values mean the tracker
// did not detect that eye.
struct GazeSample {
  TimestampUs t{0};
  std::optional<Point> left;
  std::optional<Point> right;
  std::optional<double> pupil_left;   // mm
  std::optional<double> pupil_right;  // mm

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

// Half-open pixel rectangle [x, x+w) x [y, y+h).
struct Rect {
  double x{0.0};
  double y{0.0};
  double w{0.0};
  double h{0.0};

  Point center() const { return {x + w / 2.0, y + h / 2.0}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Aoi {
  AoiId id{0};
  std::string word;
  Rect rect;

  friend bool operator==(const Aoi&, const Aoi&) = default;
};

struct AoiLayout {
  int screen_w{1920};
  int screen_h{1080};
  std::vector<Aoi> aois;

  std::size_t size() const { return aois.size(); }
  const Aoi& at(AoiId id) const;  // throws IdError for unknown ids
  bool contains_id(AoiId id) const { return id >= 1 && id <= static_cast<int>(aois.size()); }

  friend bool operator==(const AoiLayout&, const AoiLayout&) = default;
};

struct StimulusEvent {
  TimestampUs t{0};
  int trial{1};
  AoiId aoi_id{1};
  std::optional<bool> is_target;  // only known in labeled (training) sessions

  friend bool operator==(const StimulusEvent&, const StimulusEvent&) = default;
};

using FeatureVector = std::vector<double>;

// Everything recorded for one trial. features[i] belongs to events[i].
struct TrialBundle {
  int trial{1};
  TimestampUs start_us{0};
  TimestampUs end_us{0};
  std::optional<AoiId> target_aoi;
  std::vector<GazeSample> gaze;
  std::vector<StimulusEvent> events;
  std::vector<FeatureVector> features;

  friend bool operator==(const TrialBundle&, const TrialBundle&) = default;
};

// The seven paradigm words, in grid order.
const std::vector<std::string>& default_words();

// Grid of `count` AOIs, row-major, `cols` per row, equal gutters between
// cells and at the screen border. The default is the 2x4 speller grid with
// the last cell left blank.
AoiLayout grid_layout(int count = 7, int cols = 4, int screen_w = 1920, int screen_h = 1080,
                      int gutter = 40);
inline AoiLayout default_layout() { return grid_layout(); }

// Returns the layout unchanged or throws OverlapError / BoundsError / IdError.
const AoiLayout& validate_layout(const AoiLayout& layout);

// Left/right average, or the single valid eye, or nothing.
std::optional<Point> mono_point(const GazeSample& s);

// Mean of the present pupil diameters.
std::optional<double> mono_pupil(const GazeSample& s);

bool point_in_aoi(Point p, const Rect& rect);

// AOI id hit by `p`, if any. Assumes a validated (disjoint) layout.
std::optional<AoiId> hit_aoi(Point p, const AoiLayout& layout);

// Checks per-sample invariants (finite coordinates, 0 < pupil < 10 mm) and
// strictly increasing timestamps. Throws SchemaError / MonotonicityError.
void validate_gaze_stream(std::span<const GazeSample> gaze);

}  // namespace hybridfuse
