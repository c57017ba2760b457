#include "hybridfuse/core.hpp"

#include "hybridfuse/errors.hpp"

#include <cmath>
#include <string>

namespace hybridfuse {

const Aoi& AoiLayout::at(AoiId id) const {
  if (!contains_id(id)) throw IdError("unknown AOI id " + std::to_string(id));
  return aois[static_cast<std::size_t>(id - 1)];
}

const std::vector<std::string>& default_words() {
  static const std::vector<std::string> words{"Sim", "N\xC3\xA3o", "Tosse", "Ajuda",
                                              "Stop", "TV", "Sono"};
  return words;
}

AoiLayout grid_layout(int count, int cols, int screen_w, int screen_h, int gutter) {
  if (count < 2) throw IdError("layout needs at least 2 AOIs");
  if (cols < 1) throw BoundsError("grid needs at least one column");
  const int rows = (count + cols - 1) / cols;
  const double cell_w = static_cast<double>(screen_w - (cols + 1) * gutter) / cols;
  const double cell_h = static_cast<double>(screen_h - (rows + 1) * gutter) / rows;
  if (cell_w <= 0.0 || cell_h <= 0.0) throw BoundsError("screen too small for grid");

  AoiLayout layout;
  layout.screen_w = screen_w;
  layout.screen_h = screen_h;
  const auto& words = default_words();
  for (int k = 0; k < count; ++k) {
    const int row = k / cols;
    const int col = k % cols;
    Aoi aoi;
    aoi.id = k + 1;
    aoi.word = k < static_cast<int>(words.size()) ? words[static_cast<std::size_t>(k)]
                                                   : "W" + std::to_string(k + 1);
    aoi.rect = {gutter + col * (cell_w + gutter), gutter + row * (cell_h + gutter), cell_w, cell_h};
    layout.aois.push_back(std::move(aoi));
  }
  return layout;
}

namespace {

bool rects_intersect(const Rect& a, const Rect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

}  // namespace

const AoiLayout& validate_layout(const AoiLayout& layout) {
  if (layout.screen_w <= 0 || layout.screen_h <= 0) throw BoundsError("screen size must be positive");
  if (layout.aois.size() < 2) throw IdError("layout needs at least 2 AOIs");

  for (std::size_t i = 0; i < layout.aois.size(); ++i) {
    const Aoi& a = layout.aois[i];
    if (a.id != static_cast<int>(i) + 1) {
      throw IdError("AOI ids must be contiguous from 1; position " + std::to_string(i + 1) +
                    " has id " + std::to_string(a.id));
    }
    const Rect& r = a.rect;
    if (!std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.w) || !std::isfinite(r.h) ||
        r.w <= 0.0 || r.h <= 0.0 || r.x < 0.0 || r.y < 0.0 || r.x + r.w > layout.screen_w ||
        r.y + r.h > layout.screen_h) {
      throw BoundsError("AOI " + std::to_string(a.id) + " is empty or exits the screen");
    }
  }
  for (std::size_t i = 0; i < layout.aois.size(); ++i) {
    for (std::size_t j = i + 1; j < layout.aois.size(); ++j) {
      if (rects_intersect(layout.aois[i].rect, layout.aois[j].rect)) {
        throw OverlapError("AOIs " + std::to_string(layout.aois[i].id) + " and " +
                           std::to_string(layout.aois[j].id) + " overlap");
      }
    }
  }
  return layout;
}

std::optional<Point> mono_point(const GazeSample& s) {
  if (s.left && s.right) return Point{(s.left->x + s.right->x) / 2.0, (s.left->y + s.right->y) / 2.0};
  if (s.left) return s.left;
  if (s.right) return s.right;
  return std::nullopt;
}

std::optional<double> mono_pupil(const GazeSample& s) {
  if (s.pupil_left && s.pupil_right) return (*s.pupil_left + *s.pupil_right) / 2.0;
  if (s.pupil_left) return s.pupil_left;
  if (s.pupil_right) return s.pupil_right;
  return std::nullopt;
}

bool point_in_aoi(Point p, const Rect& rect) {
  return p.x >= rect.x && p.x < rect.x + rect.w && p.y >= rect.y && p.y < rect.y + rect.h;
}

std::optional<AoiId> hit_aoi(Point p, const AoiLayout& layout) {
  for (const Aoi& a : layout.aois) {
    if (point_in_aoi(p, a.rect)) return a.id;
  }
  return std::nullopt;
}

void validate_gaze_stream(std::span<const GazeSample> gaze) {
  for (std::size_t i = 0; i < gaze.size(); ++i) {
    const GazeSample& s = gaze[i];
    if (i > 0 && s.t <= gaze[i - 1].t) {
      throw MonotonicityError("gaze timestamps not strictly increasing at t=" + std::to_string(s.t));
    }
    for (const auto& p : {s.left, s.right}) {
      if (p && (!std::isfinite(p->x) || !std::isfinite(p->y))) {
        throw SchemaError("non-finite gaze coordinate at t=" + std::to_string(s.t));
      }
    }
    for (const auto& d : {s.pupil_left, s.pupil_right}) {
      if (d && !(*d > 0.0 && *d < 10.0)) {
        throw SchemaError("pupil diameter out of (0, 10) mm at t=" + std::to_string(s.t));
      }
    }
  }
}

}  // namespace hybridfuse
