#include "hybridfuse/session_io.hpp"

#include "hybridfuse/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace hybridfuse {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// ---------------------------------------------------------------- text I/O

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::string text;  // owns the row views
};

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected_header) {
  CsvTable t;
  t.name = path.filename().string();
  t.text = read_text(path);
  std::string_view all(t.text);
  bool first = true;
  while (!all.empty()) {
    const std::size_t nl = all.find('\n');
    std::string_view line = all.substr(0, nl);
    all = nl == std::string_view::npos ? std::string_view{} : all.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') throw SchemaError(t.name + ": CR line endings are not allowed");
    if (first) {
      for (auto f : split_csv(line)) t.header.emplace_back(f);
      if (t.header != expected_header) throw SchemaError(t.name + ": unexpected header");
      first = false;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != expected_header.size()) {
      throw SchemaError(t.name + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(expected_header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (first) throw SchemaError(t.name + ": missing header");
  return t;
}

template <typename T>
T parse_number(std::string_view field, const std::string& where) {
  T value{};
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw SchemaError(where + ": cannot parse '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw SchemaError(where + ": non-finite value");
  }
  return value;
}

template <typename T>
std::optional<T> parse_optional(std::string_view field, const std::string& where) {
  if (field.empty()) return std::nullopt;
  return parse_number<T>(field, where);
}

std::string where(const CsvTable& t, std::size_t row) { return t.name + " row " + std::to_string(row + 1); }

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

// ---------------------------------------------------------------- JSON helpers

json parse_json(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(name + ": " + e.what());
  }
}

void require_keys(const json& j, const std::set<std::string>& required, const std::set<std::string>& optional,
                  const std::string& name) {
  if (!j.is_object()) throw SchemaError(name + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!required.count(key) && !optional.count(key)) throw SchemaError(name + ": unknown field '" + key + "'");
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw SchemaError(name + ": missing field '" + key + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& name) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(name + ": field '" + key + "': " + e.what());
  }
}

void check_version(const json& j, const std::string& name) {
  if (get_as<int>(j, "version", name) != kFormatVersion) throw SchemaError(name + ": unsupported version");
}

ordered_json layout_json(const AoiLayout& layout) {
  ordered_json j;
  j["version"] = kFormatVersion;
  j["screen_w"] = layout.screen_w;
  j["screen_h"] = layout.screen_h;
  j["aois"] = ordered_json::array();
  for (const Aoi& a : layout.aois) {
    j["aois"].push_back(
        {{"id", a.id}, {"word", a.word}, {"x", a.rect.x}, {"y", a.rect.y}, {"w", a.rect.w}, {"h", a.rect.h}});
  }
  return j;
}

ordered_json feature_config_json(const FeatureConfig& c) {
  return {{"channels", c.channels},
          {"sample_rate_hz", c.sample_rate_hz},
          {"window_start_ms", c.window_start_ms},
          {"window_end_ms", c.window_end_ms},
          {"blocks_per_channel", c.blocks_per_channel},
          {"bandpass_low_hz", c.bandpass_low_hz},
          {"bandpass_high_hz", c.bandpass_high_hz},
          {"notch_hz", c.notch_hz}};
}

FeatureConfig feature_config_from(const json& j, const std::string& name) {
  require_keys(j,
               {"channels", "sample_rate_hz", "window_start_ms", "window_end_ms", "blocks_per_channel",
                "bandpass_low_hz", "bandpass_high_hz", "notch_hz"},
               {}, name);
  FeatureConfig c;
  c.channels = get_as<int>(j, "channels", name);
  c.sample_rate_hz = get_as<double>(j, "sample_rate_hz", name);
  c.window_start_ms = get_as<double>(j, "window_start_ms", name);
  c.window_end_ms = get_as<double>(j, "window_end_ms", name);
  c.blocks_per_channel = get_as<int>(j, "blocks_per_channel", name);
  c.bandpass_low_hz = get_as<double>(j, "bandpass_low_hz", name);
  c.bandpass_high_hz = get_as<double>(j, "bandpass_high_hz", name);
  c.notch_hz = get_as<double>(j, "notch_hz", name);
  return c;
}

ordered_json manifest_json(const SessionManifest& m) {
  ordered_json j;
  j["version"] = kFormatVersion;
  j["session_id"] = m.session_id;
  j["subject"] = m.subject;
  j["screen_w"] = m.screen_w;
  j["screen_h"] = m.screen_h;
  j["gaze_hz"] = m.gaze_hz;
  j["eeg_hz"] = m.eeg_hz;
  j["feature_dim"] = m.feature_dim;
  j["trial_windows"] = ordered_json::array();
  for (const auto& w : m.trial_windows) {
    j["trial_windows"].push_back({{"trial", w.trial}, {"start_us", w.start_us}, {"end_us", w.end_us}});
  }
  if (m.ground_truth) {
    j["ground_truth"] = ordered_json::array();
    for (const auto& [trial, aoi] : *m.ground_truth) j["ground_truth"].push_back({{"trial", trial}, {"target_aoi", aoi}});
  }
  j["files"] = {{"gaze", m.files.gaze}, {"events", m.files.events}, {"features", m.files.features},
                {"layout", m.files.layout}};
  return j;
}

SessionManifest manifest_from(const json& j) {
  const std::string name = "manifest.json";
  require_keys(j,
               {"version", "session_id", "subject", "screen_w", "screen_h", "gaze_hz", "eeg_hz", "feature_dim",
                "trial_windows", "files"},
               {"ground_truth"}, name);
  check_version(j, name);
  SessionManifest m;
  m.session_id = get_as<std::string>(j, "session_id", name);
  m.subject = get_as<std::string>(j, "subject", name);
  m.screen_w = get_as<int>(j, "screen_w", name);
  m.screen_h = get_as<int>(j, "screen_h", name);
  m.gaze_hz = get_as<double>(j, "gaze_hz", name);
  m.eeg_hz = get_as<double>(j, "eeg_hz", name);
  m.feature_dim = get_as<int>(j, "feature_dim", name);
  if (!(m.gaze_hz > 0.0) || !(m.eeg_hz > 0.0)) throw SchemaError(name + ": sample rates must be positive");
  if (m.feature_dim < 0) throw SchemaError(name + ": feature_dim must be non-negative");

  for (const auto& w : j.at("trial_windows")) {
    require_keys(w, {"trial", "start_us", "end_us"}, {}, name + " trial_windows");
    m.trial_windows.push_back({get_as<int>(w, "trial", name), get_as<TimestampUs>(w, "start_us", name),
                               get_as<TimestampUs>(w, "end_us", name)});
  }
  if (j.contains("ground_truth")) {
    m.ground_truth.emplace();
    for (const auto& g : j.at("ground_truth")) {
      require_keys(g, {"trial", "target_aoi"}, {}, name + " ground_truth");
      m.ground_truth->emplace_back(get_as<int>(g, "trial", name), get_as<AoiId>(g, "target_aoi", name));
    }
  }
  const json& f = j.at("files");
  require_keys(f, {"gaze", "events", "features", "layout"}, {}, name + " files");
  m.files.gaze = get_as<std::string>(f, "gaze", name);
  m.files.events = get_as<std::string>(f, "events", name);
  m.files.features = get_as<std::string>(f, "features", name);
  m.files.layout = get_as<std::string>(f, "layout", name);
  return m;
}

const std::vector<std::string> kGazeHeader{"t_us",      "lx_px",     "ly_px",  "rx_px", "ry_px",
                                           "lpupil_mm", "rpupil_mm", "lvalid", "rvalid"};
const std::vector<std::string> kEventsHeader{"t_us", "trial", "aoi_id", "is_target"};

std::vector<std::string> features_header(int dim) {
  std::vector<std::string> h{"trial", "event_idx", "aoi_id"};
  for (int d = 0; d < dim; ++d) h.push_back("f_" + std::to_string(d));
  return h;
}

std::optional<Point> parse_eye(const CsvTable& t, std::size_t row, std::size_t xcol, std::size_t validcol) {
  const auto& r = t.rows[row];
  const auto valid = parse_number<int>(r[validcol], where(t, row));
  if (valid != 0 && valid != 1) throw SchemaError(where(t, row) + ": validity flag must be 0 or 1");
  const auto x = parse_optional<double>(r[xcol], where(t, row));
  const auto y = parse_optional<double>(r[xcol + 1], where(t, row));
  if (valid == 1) {
    if (!x || !y) throw SchemaError(where(t, row) + ": valid eye without coordinates");
    return Point{*x, *y};
  }
  if (x || y) throw SchemaError(where(t, row) + ": invalid eye with coordinates");
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- Session

std::vector<GazeSample> Session::all_gaze() const {
  std::vector<GazeSample> out = intertrial_gaze;
  for (const auto& t : trials) out.insert(out.end(), t.gaze.begin(), t.gaze.end());
  std::sort(out.begin(), out.end(), [](const GazeSample& a, const GazeSample& b) { return a.t < b.t; });
  return out;
}

std::vector<TimeWindow> Session::windows() const {
  std::vector<TimeWindow> out;
  for (const auto& t : trials) out.push_back({t.start_us, t.end_us});
  return out;
}

bool is_session_dir(const fs::path& dir) { return fs::is_regular_file(dir / "manifest.json"); }

std::vector<fs::path> find_sessions(const fs::path& root) {
  if (is_session_dir(root)) return {root};
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory() && is_session_dir(entry.path())) out.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + root.string());
  std::sort(out.begin(), out.end());
  return out;
}

LoadResult load_session(const fs::path& dir) {
  LoadResult result;
  Session& s = result.session;
  if (!is_session_dir(dir)) throw IoError("no manifest.json in " + dir.string());
  s.manifest = manifest_from(parse_json(read_text(dir / "manifest.json"), "manifest.json"));
  const SessionManifest& m = s.manifest;

  for (const std::string* f : {&m.files.gaze, &m.files.events, &m.files.features, &m.files.layout}) {
    if (!fs::is_regular_file(dir / *f)) throw CrossRefError("manifest references missing file " + *f);
  }

  {
    const json lj = parse_json(read_text(dir / m.files.layout), m.files.layout);
    s.layout = layout_from_json(lj.dump());
    if (s.layout.screen_w != m.screen_w || s.layout.screen_h != m.screen_h) {
      throw CrossRefError("layout screen size differs from manifest");
    }
  }

  // trial windows
  std::map<int, std::size_t> trial_index;
  for (std::size_t i = 0; i < m.trial_windows.size(); ++i) {
    const auto& w = m.trial_windows[i];
    if (w.end_us <= w.start_us) throw SchemaError("trial " + std::to_string(w.trial) + " has an empty window");
    if (i > 0 && w.start_us < m.trial_windows[i - 1].end_us) {
      throw MonotonicityError("trial windows must be disjoint and ascending");
    }
    if (!trial_index.emplace(w.trial, i).second) throw SchemaError("duplicate trial " + std::to_string(w.trial));
    TrialBundle b;
    b.trial = w.trial;
    b.start_us = w.start_us;
    b.end_us = w.end_us;
    s.trials.push_back(std::move(b));
  }
  if (m.ground_truth) {
    for (const auto& [trial, aoi] : *m.ground_truth) {
      const auto it = trial_index.find(trial);
      if (it == trial_index.end()) throw CrossRefError("ground truth for unknown trial " + std::to_string(trial));
      if (!s.layout.contains_id(aoi)) throw CrossRefError("ground truth references unknown AOI " + std::to_string(aoi));
      s.trials[it->second].target_aoi = aoi;
    }
  }

  // gaze
  {
    const CsvTable t = read_csv(dir / m.files.gaze, kGazeHeader);
    std::vector<GazeSample> gaze;
    gaze.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      GazeSample g;
      g.t = parse_number<TimestampUs>(r[0], where(t, i));
      g.left = parse_eye(t, i, 1, 7);
      g.right = parse_eye(t, i, 3, 8);
      g.pupil_left = parse_optional<double>(r[5], where(t, i));
      g.pupil_right = parse_optional<double>(r[6], where(t, i));
      gaze.push_back(g);
    }
    validate_gaze_stream(gaze);
    std::size_t w = 0;
    for (GazeSample& g : gaze) {
      while (w < s.trials.size() && g.t >= s.trials[w].end_us) ++w;
      if (w < s.trials.size() && g.t >= s.trials[w].start_us) {
        s.trials[w].gaze.push_back(g);
      } else {
        s.intertrial_gaze.push_back(g);
      }
    }
  }

  // events
  {
    const CsvTable t = read_csv(dir / m.files.events, kEventsHeader);
    TimestampUs last = std::numeric_limits<TimestampUs>::min();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      StimulusEvent e;
      e.t = parse_number<TimestampUs>(r[0], where(t, i));
      e.trial = parse_number<int>(r[1], where(t, i));
      e.aoi_id = parse_number<AoiId>(r[2], where(t, i));
      if (const auto lbl = parse_optional<int>(r[3], where(t, i))) {
        if (*lbl != 0 && *lbl != 1) throw SchemaError(where(t, i) + ": is_target must be 0, 1 or empty");
        e.is_target = *lbl == 1;
      }
      if (e.t <= last) throw MonotonicityError(where(t, i) + ": event timestamps not strictly increasing");
      last = e.t;
      const auto it = trial_index.find(e.trial);
      if (it == trial_index.end()) throw CrossRefError(where(t, i) + ": unknown trial " + std::to_string(e.trial));
      if (!s.layout.contains_id(e.aoi_id)) throw CrossRefError(where(t, i) + ": unknown AOI " + std::to_string(e.aoi_id));
      TrialBundle& b = s.trials[it->second];
      if (e.t < b.start_us || e.t >= b.end_us) throw SchemaError(where(t, i) + ": event outside its trial window");
      b.events.push_back(e);
    }
  }

  // features
  {
    const CsvTable t = read_csv(dir / m.files.features, features_header(m.feature_dim));
    std::map<std::pair<int, std::size_t>, FeatureVector> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      const int trial = parse_number<int>(r[0], where(t, i));
      const auto idx = parse_number<std::size_t>(r[1], where(t, i));
      const AoiId aoi = parse_number<AoiId>(r[2], where(t, i));
      const auto it = trial_index.find(trial);
      if (it == trial_index.end()) throw CrossRefError(where(t, i) + ": unknown trial " + std::to_string(trial));
      const TrialBundle& b = s.trials[it->second];
      if (idx >= b.events.size()) throw CrossRefError(where(t, i) + ": feature row has no matching event");
      if (b.events[idx].aoi_id != aoi) throw CrossRefError(where(t, i) + ": AOI differs from its event");
      FeatureVector f;
      f.reserve(static_cast<std::size_t>(m.feature_dim));
      for (int d = 0; d < m.feature_dim; ++d) f.push_back(parse_number<double>(r[3 + d], where(t, i)));
      if (!rows.emplace(std::make_pair(trial, idx), std::move(f)).second) {
        throw CrossRefError(where(t, i) + ": duplicate feature row");
      }
    }
    for (TrialBundle& b : s.trials) {
      for (std::size_t idx = 0; idx < b.events.size(); ++idx) {
        auto it = rows.find({b.trial, idx});
        if (it == rows.end()) {
          throw CrossRefError("trial " + std::to_string(b.trial) + " event " + std::to_string(idx) +
                              " has no feature row");
        }
        b.features.push_back(std::move(it->second));
      }
    }
  }

  for (const TrialBundle& b : s.trials) {
    if (b.gaze.empty()) result.warnings.push_back("trial " + std::to_string(b.trial) + " has no gaze samples");
    if (b.events.empty()) result.warnings.push_back("trial " + std::to_string(b.trial) + " has no events");
  }
  return result;
}

void save_session(const Session& session, const fs::path& dir) {
  SessionManifest m = session.manifest;
  m.screen_w = session.layout.screen_w;
  m.screen_h = session.layout.screen_h;
  m.trial_windows.clear();
  std::vector<std::pair<int, AoiId>> truth;
  for (const TrialBundle& b : session.trials) {
    m.trial_windows.push_back({b.trial, b.start_us, b.end_us});
    if (b.target_aoi) truth.emplace_back(b.trial, *b.target_aoi);
    if (!b.features.empty()) m.feature_dim = static_cast<int>(b.features.front().size());
  }
  m.ground_truth = truth.empty() ? std::nullopt : std::optional(truth);

  ensure_dir(dir);
  write_text(dir / "manifest.json", manifest_json(m).dump(2) + "\n");
  write_text(dir / m.files.layout, layout_to_json(session.layout));

  std::string gaze;
  for (std::size_t i = 0; i < kGazeHeader.size(); ++i) gaze += (i ? "," : "") + kGazeHeader[i];
  gaze += '\n';
  for (const GazeSample& g : session.all_gaze()) {
    gaze += std::to_string(g.t);
    for (const auto& eye : {g.left, g.right}) {
      gaze += ',' + (eye ? format_real(eye->x) : "") + ',' + (eye ? format_real(eye->y) : "");
    }
    gaze += ',' + opt_real(g.pupil_left) + ',' + opt_real(g.pupil_right);
    gaze += std::string(",") + (g.left ? "1" : "0") + "," + (g.right ? "1" : "0") + "\n";
  }
  write_text(dir / m.files.gaze, gaze);

  std::string events = "t_us,trial,aoi_id,is_target\n";
  std::string features;
  const auto fh = features_header(m.feature_dim);
  for (std::size_t i = 0; i < fh.size(); ++i) features += (i ? "," : "") + fh[i];
  features += '\n';
  for (const TrialBundle& b : session.trials) {
    for (std::size_t i = 0; i < b.events.size(); ++i) {
      const StimulusEvent& e = b.events[i];
      events += std::to_string(e.t) + ',' + std::to_string(b.trial) + ',' + std::to_string(e.aoi_id) + ',' +
                (e.is_target ? (*e.is_target ? "1" : "0") : "") + '\n';
      if (i < b.features.size()) {
        features += std::to_string(b.trial) + ',' + std::to_string(i) + ',' + std::to_string(e.aoi_id);
        for (double v : b.features[i]) features += ',' + format_real(v);
        features += '\n';
      }
    }
  }
  write_text(dir / m.files.events, events);
  write_text(dir / m.files.features, features);
}

// ---------------------------------------------------------------- layout / model

std::string layout_to_json(const AoiLayout& layout) { return layout_json(layout).dump(2) + "\n"; }

AoiLayout layout_from_json(const std::string& text) {
  const std::string name = "layout.json";
  const json j = parse_json(text, name);
  require_keys(j, {"version", "screen_w", "screen_h", "aois"}, {}, name);
  check_version(j, name);
  AoiLayout layout;
  layout.screen_w = get_as<int>(j, "screen_w", name);
  layout.screen_h = get_as<int>(j, "screen_h", name);
  for (const auto& a : j.at("aois")) {
    require_keys(a, {"id", "word", "x", "y", "w", "h"}, {}, name + " aois");
    layout.aois.push_back({get_as<int>(a, "id", name),
                           get_as<std::string>(a, "word", name),
                           {get_as<double>(a, "x", name), get_as<double>(a, "y", name), get_as<double>(a, "w", name),
                            get_as<double>(a, "h", name)}});
  }
  validate_layout(layout);
  return layout;
}

std::string model_to_json(const GnbModel& model) {
  ordered_json j;
  j["version"] = kFormatVersion;
  j["D"] = model.dimension();
  j["priors"] = model.priors;
  j["means"] = model.means;
  j["variances"] = model.variances;
  j["feature_config"] = feature_config_json(model.feature_config);
  if (model.standardization.empty()) {
    j["standardization"] = nullptr;
  } else {
    j["standardization"] = {{"mean", model.standardization.mean}, {"scale", model.standardization.scale}};
  }
  return j.dump(2) + "\n";
}

GnbModel model_from_json(const std::string& text) {
  const std::string name = "model";
  const json j = parse_json(text, name);
  require_keys(j, {"version", "D", "priors", "means", "variances", "feature_config", "standardization"}, {}, name);
  check_version(j, name);
  GnbModel m;
  const auto dim = get_as<std::size_t>(j, "D", name);
  m.priors = get_as<std::array<double, 2>>(j, "priors", name);
  m.means = get_as<std::array<std::vector<double>, 2>>(j, "means", name);
  m.variances = get_as<std::array<std::vector<double>, 2>>(j, "variances", name);
  m.feature_config = feature_config_from(j.at("feature_config"), name + " feature_config");
  if (!j.at("standardization").is_null()) {
    const json& st = j.at("standardization");
    require_keys(st, {"mean", "scale"}, {}, name + " standardization");
    m.standardization.mean = get_as<std::vector<double>>(st, "mean", name);
    m.standardization.scale = get_as<std::vector<double>>(st, "scale", name);
    if (m.standardization.mean.size() != dim || m.standardization.scale.size() != dim) {
      throw SchemaError(name + ": standardization dimension mismatch");
    }
    for (double s : m.standardization.scale) {
      if (!(s > 0.0)) throw SchemaError(name + ": standardization scale must be positive");
    }
  }
  if (!(m.priors[0] > 0.0 && m.priors[1] > 0.0) || std::abs(m.priors[0] + m.priors[1] - 1.0) > 1e-12) {
    throw SchemaError(name + ": priors must be positive and sum to 1");
  }
  for (int c = 0; c < 2; ++c) {
    if (m.means[c].size() != dim || m.variances[c].size() != dim) throw SchemaError(name + ": dimension mismatch");
    for (double v : m.variances[c]) {
      if (!(v > 0.0)) throw SchemaError(name + ": variances must be positive");
    }
  }
  return m;
}

void save_model(const GnbModel& model, const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_text(path, model_to_json(model));
}

GnbModel load_model(const fs::path& path) { return model_from_json(read_text(path)); }

std::vector<LabeledFeature> labeled_features(const Session& session) {
  std::vector<LabeledFeature> out;
  for (const TrialBundle& b : session.trials) {
    for (std::size_t i = 0; i < b.events.size(); ++i) {
      if (!b.events[i].is_target) {
        throw SchemaError("trial " + std::to_string(b.trial) + " event " + std::to_string(i) +
                          " is unlabeled; training needs a labeled session");
      }
      out.push_back({b.features.at(i), *b.events[i].is_target});
    }
  }
  return out;
}

// ---------------------------------------------------------------- analytics / report

SessionAnalytics analyze_session(const Session& session, const AnalyticsOptions& options) {
  SessionAnalytics a;
  a.layout = session.layout;
  std::vector<GazeSample> in_trial;
  for (const TrialBundle& b : session.trials) {
    TrialAnalytics t;
    t.trial = b.trial;
    try {
      t.centroid = centroid(b.gaze);
      t.ellipse = confidence_ellipse(b.gaze, options.coverage);
    } catch (const EmptyTrialError&) {
    } catch (const InsufficientDataError&) {
    } catch (const DegenerateError&) {
    }
    a.trials.push_back(t);
    in_trial.insert(in_trial.end(), b.gaze.begin(), b.gaze.end());
  }
  try {
    const auto windows = session.windows();
    a.pupil = pupil_summary(session.all_gaze(), windows);
  } catch (const NoPupilDataError&) {
  }
  a.heatmap = heatmap(in_trial, session.layout.screen_w, session.layout.screen_h, options.heatmap_bin,
                      options.heatmap_sigma);
  return a;
}

std::string ReportSummary::text() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "trials=%zu scored=%zu correct=%zu accuracy=%.4f", trials, scored, correct,
                accuracy());
  return buf;
}

ReportSummary summarize(std::span<const TrialDecisionRecord> decisions) {
  ReportSummary s;
  s.trials = decisions.size();
  for (const auto& d : decisions) {
    if (!d.truth) continue;
    ++s.scored;
    if (d.decision.chosen_aoi == d.truth) ++s.correct;
  }
  return s;
}

namespace {

std::string score_matrix_csv(std::span<const TrialDecisionRecord> decisions, bool eeg, bool log10) {
  std::size_t k = 0;
  for (const auto& d : decisions) k = std::max(k, eeg ? d.decision.c_eeg.size() : d.decision.c_et.size());
  std::string out = "trial";
  for (std::size_t i = 1; i <= k; ++i) out += ",aoi_" + std::to_string(i);
  out += '\n';
  for (const auto& d : decisions) {
    out += std::to_string(d.trial);
    for (double v : eeg ? d.decision.c_eeg : d.decision.c_et) {
      out += ',' + format_real(log10 ? std::log10(std::max(v, 1e-300)) : v);
    }
    out += '\n';
  }
  return out;
}

std::string svg_overlay(const SessionAnalytics& a) {
  std::ostringstream svg;
  const AoiLayout& l = a.layout;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << l.screen_w << "\" height=\"" << l.screen_h
      << "\" viewBox=\"0 0 " << l.screen_w << ' ' << l.screen_h << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << l.screen_w << "\" height=\"" << l.screen_h << "\" fill=\"white\"/>\n";
  double peak = 0.0;
  for (double v : a.heatmap.density) peak = std::max(peak, v);
  if (peak > 0.0) {
    for (int r = 0; r < a.heatmap.rows; ++r) {
      for (int c = 0; c < a.heatmap.cols; ++c) {
        const double v = a.heatmap.at(c, r) / peak;
        if (v < 0.01) continue;
        svg << "<rect x=\"" << c * a.heatmap.bin << "\" y=\"" << r * a.heatmap.bin << "\" width=\"" << a.heatmap.bin
            << "\" height=\"" << a.heatmap.bin << "\" fill=\"red\" fill-opacity=\"" << format_real(0.8 * v)
            << "\"/>\n";
      }
    }
  }
  for (const Aoi& aoi : l.aois) {
    svg << "<rect x=\"" << aoi.rect.x << "\" y=\"" << aoi.rect.y << "\" width=\"" << aoi.rect.w << "\" height=\""
        << aoi.rect.h << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
    const Point c = aoi.rect.center();
    svg << "<text x=\"" << c.x << "\" y=\"" << c.y << "\" font-size=\"48\" text-anchor=\"middle\">" << aoi.word
        << "</text>\n";
  }
  for (const auto& t : a.trials) {
    if (t.ellipse) {
      const auto& e = *t.ellipse;
      svg << "<ellipse cx=\"" << format_real(e.center.x) << "\" cy=\"" << format_real(e.center.y) << "\" rx=\""
          << format_real(e.semi_major) << "\" ry=\"" << format_real(e.semi_minor) << "\" transform=\"rotate("
          << format_real(e.orientation * 180.0 / std::numbers::pi) << ' ' << format_real(e.center.x) << ' '
          << format_real(e.center.y) << ")\" fill=\"none\" stroke=\"blue\" stroke-width=\"2\"/>\n";
    }
    if (t.centroid) {
      svg << "<text x=\"" << format_real(t.centroid->x) << "\" y=\"" << format_real(t.centroid->y)
          << "\" font-size=\"24\" text-anchor=\"middle\" fill=\"blue\">X</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

ReportSummary export_report(std::span<const TrialDecisionRecord> decisions, const SessionAnalytics& analytics,
                            const fs::path& dir) {
  if (decisions.empty()) throw std::invalid_argument("report needs at least one decision");
  ensure_dir(dir);
  const ReportSummary summary = summarize(decisions);

  std::string csv = "trial,chosen,truth,mode,correct\n";
  for (const auto& d : decisions) {
    csv += std::to_string(d.trial) + ',' + (d.decision.chosen_aoi ? std::to_string(*d.decision.chosen_aoi) : "") +
           ',' + (d.truth ? std::to_string(*d.truth) : "") + ',' + std::string(to_string(d.decision.mode)) + ',' +
           (d.truth ? (d.decision.chosen_aoi == d.truth ? "1" : "0") : "") + '\n';
  }
  write_text(dir / "decisions.csv", csv);
  write_text(dir / "scores_et.csv", score_matrix_csv(decisions, false, false));
  write_text(dir / "scores_eeg.csv", score_matrix_csv(decisions, true, false));
  write_text(dir / "scores_eeg_log10.csv", score_matrix_csv(decisions, true, true));

  std::string ell = "trial,center_x,center_y,semi_major,semi_minor,angle_rad,area_px2\n";
  for (const auto& t : analytics.trials) {
    ell += std::to_string(t.trial);
    if (t.ellipse) {
      const auto& e = *t.ellipse;
      for (double v : {e.center.x, e.center.y, e.semi_major, e.semi_minor, e.orientation, e.area}) {
        ell += ',' + format_real(v);
      }
    } else {
      ell += ",,,,,,";
    }
    ell += '\n';
  }
  write_text(dir / "ellipse.csv", ell);

  std::string pupil = "scope,trial,median_mm,sd_mm\n";
  if (analytics.pupil) {
    const auto& p = *analytics.pupil;
    pupil += "trial-periods,," + format_real(p.trial_median) + ',' + format_real(p.trial_sd) + '\n';
    pupil += "intertrial-periods,," + format_real(p.intertrial_median) + ',' + format_real(p.intertrial_sd) + '\n';
    for (std::size_t i = 0; i < p.per_trial_medians.size() && i < analytics.trials.size(); ++i) {
      pupil += "trial," + std::to_string(analytics.trials[i].trial) + ',' + opt_real(p.per_trial_medians[i]) + ",\n";
    }
  }
  write_text(dir / "pupil.csv", pupil);

  std::string hm;
  for (int r = 0; r < analytics.heatmap.rows; ++r) {
    for (int c = 0; c < analytics.heatmap.cols; ++c) hm += (c ? "," : "") + format_real(analytics.heatmap.at(c, r));
    hm += '\n';
  }
  write_text(dir / "heatmap.csv", hm);
  write_text(dir / "overlay.svg", svg_overlay(analytics));
  write_text(dir / "summary.txt", summary.text() + "\n");
  return summary;
}

}  // namespace hybridfuse
