#include "hybridfuse/live_session.hpp"

#include "hybridfuse/errors.hpp"
#include "hybridfuse/simulator.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace hybridfuse {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(LivePhase phase) {
  switch (phase) {
    case LivePhase::Idle: return "idle";
    case LivePhase::Calibrating: return "calibrating";
    case LivePhase::TrialRunning: return "trial-running";
    case LivePhase::Deciding: return "deciding";
  }
  return "?";
}

void LiveConfig::validate() const {
  if (trials < 1 || repetitions < 1) throw ConfigError("live session needs trials >= 1 and repetitions >= 1");
  if (flash_ms < 1 || isi_ms < 0) throw ConfigError("flash timing out of range");
  if (!(eeg_separation >= 0.0)) throw ConfigError("EEG separation must be >= 0");
  fusion.validate();
}

LiveSession::LiveSession(LiveConfig cfg, AoiLayout layout, GnbModel model)
    : cfg_(std::move(cfg)), layout_(std::move(layout)), model_(std::move(model)) {
  cfg_.validate();
  validate_layout(layout_);
  for (AoiId id : cfg_.targets) {
    if (!layout_.contains_id(id)) throw ConfigError("scripted target " + std::to_string(id) + " is not in the layout");
  }
}

std::string LiveSession::error_message(std::string_view code, std::string_view detail, TimestampUs now) const {
  return ordered_json{{"type", "error"}, {"t_us", now}, {"code", code}, {"detail", detail}}.dump();
}

std::optional<TimestampUs> LiveSession::next_deadline() const {
  switch (phase_) {
    case LivePhase::Calibrating: return clock_;
    case LivePhase::TrialRunning:
      if (next_flash_ < flash_order_.size()) {
        return current_.start_us + static_cast<TimestampUs>(next_flash_) * (cfg_.flash_ms + cfg_.isi_ms) * 1000;
      }
      return current_.end_us;
    default: return std::nullopt;
  }
}

void LiveSession::begin_session(TimestampUs now) {
  ++sessions_started_;
  trial_index_ = 0;
  decisions_.clear();
  recorded_ = Session{};
  recorded_.layout = layout_;
  char id[32];
  std::snprintf(id, sizeof id, "session_%03d", sessions_started_);
  recorded_.manifest.session_id = id;
  recorded_.manifest.subject = "live";
  recorded_.manifest.screen_w = layout_.screen_w;
  recorded_.manifest.screen_h = layout_.screen_h;
  recorded_.manifest.feature_dim = static_cast<int>(model_.dimension());
  session_dir_.reset();
  if (cfg_.record_root) session_dir_ = *cfg_.record_root / id;
  phase_ = LivePhase::Calibrating;
  clock_ = now;
}

void LiveSession::begin_trial(TimestampUs now, Reply& out) {
  ++trial_index_;
  const auto K = static_cast<int>(layout_.size());
  const AoiId target = cfg_.targets.empty()
                           ? (trial_index_ - 1) % K + 1
                           : cfg_.targets[static_cast<std::size_t>(trial_index_ - 1) % cfg_.targets.size()];
  current_ = TrialBundle{};
  current_.trial = trial_index_;
  current_.target_aoi = target;
  current_.start_us = now;
  current_.end_us = now + static_cast<TimestampUs>(K) * cfg_.repetitions * (cfg_.flash_ms + cfg_.isi_ms) * 1000;
  flash_order_ =
      make_sequence(K, cfg_.repetitions, derive_seed(cfg_.seed, static_cast<std::uint64_t>(trial_index_))).ids;
  next_flash_ = 0;
  phase_ = LivePhase::TrialRunning;
  out.messages.push_back(ordered_json{{"type", "trial_start"},
                                      {"t_us", now},
                                      {"trial", trial_index_},
                                      {"target_word", layout_.at(target).word}}
                             .dump());
}

void LiveSession::finish_trial(Reply& out) {
  recorded_.trials.push_back(current_);
  const FusionDecision d = decide_trial(current_, model_, layout_, cfg_.fusion);
  decisions_.push_back(d);
  phase_ = LivePhase::Deciding;

  out.messages.push_back(
      ordered_json{{"type", "trial_end"}, {"t_us", current_.end_us}, {"trial", current_.trial}}.dump());
  ordered_json msg{{"type", "decision"}, {"t_us", current_.end_us}, {"trial", current_.trial}};
  if (d.chosen_aoi) {
    msg["aoi_id"] = *d.chosen_aoi;
    msg["word"] = layout_.at(*d.chosen_aoi).word;
  } else {
    msg["aoi_id"] = nullptr;
    msg["word"] = nullptr;
  }
  msg["mode"] = to_string(d.mode);
  msg["c_et"] = d.c_et;
  msg["c_eeg"] = d.c_eeg;
  out.messages.push_back(msg.dump());
  persist();
}

void LiveSession::persist() {
  if (session_dir_) save_session(recorded_, *session_dir_);
}

void LiveSession::advance(TimestampUs now, Reply& out) {
  clock_ = std::max(clock_, now);
  if (phase_ == LivePhase::Calibrating) begin_trial(clock_, out);
  if (phase_ != LivePhase::TrialRunning) return;

  const TimestampUs period = static_cast<TimestampUs>(cfg_.flash_ms + cfg_.isi_ms) * 1000;
  while (next_flash_ < flash_order_.size()) {
    const TimestampUs t = current_.start_us + static_cast<TimestampUs>(next_flash_) * period;
    if (t > clock_) break;
    const AoiId aoi = flash_order_[next_flash_];
    StimulusEvent e{t, trial_index_, aoi, std::nullopt};
    Rng rng(derive_seed(cfg_.seed ^ 0xEEull, static_cast<std::uint64_t>(trial_index_) * 4096 + next_flash_));
    current_.events.push_back(e);
    // no amplifier attached: the P300 response is scripted on the trial target
    current_.features.push_back(synth_features(aoi == current_.target_aoi, cfg_.eeg_separation,
                                               static_cast<int>(model_.dimension()), rng));
    out.messages.push_back(
        ordered_json{{"type", "flash"}, {"t_us", t}, {"aoi_id", aoi}, {"duration_ms", cfg_.flash_ms}}.dump());
    ++next_flash_;
  }
  if (next_flash_ == flash_order_.size() && clock_ >= current_.end_us) finish_trial(out);
}

LiveSession::Reply LiveSession::tick(TimestampUs now) {
  Reply out;
  advance(now, out);
  return out;
}

void LiveSession::disconnect() {
  if (phase_ == LivePhase::TrialRunning || phase_ == LivePhase::Calibrating) {
    current_ = TrialBundle{};
    if (phase_ == LivePhase::TrialRunning) --trial_index_;
  }
  phase_ = LivePhase::Idle;
  greeted_ = false;
}

void LiveSession::on_gaze(std::optional<Point> point, std::optional<double> pupil, TimestampUs now, Reply& out) {
  if (phase_ != LivePhase::TrialRunning) {
    out.messages.push_back(error_message("out-of-phase", "gaze is only accepted while a trial is running", now));
    return;
  }
  TimestampUs t = std::max(now, current_.start_us);
  if (!current_.gaze.empty()) t = std::max(t, current_.gaze.back().t + 1);
  if (t >= current_.end_us) {
    out.messages.push_back(error_message("out-of-phase", "gaze arrived after the trial window", now));
    return;
  }
  GazeSample s;
  s.t = t;
  s.left = point;
  s.right = point;
  s.pupil_left = pupil;
  s.pupil_right = pupil;
  current_.gaze.push_back(s);
}

LiveSession::Reply LiveSession::handle_line(std::string_view line, TimestampUs now) {
  Reply out;
  advance(now, out);
  auto violation = [&](std::string_view code, std::string_view detail) {
    out.messages.push_back(error_message(code, detail, clock_));
    out.close = true;
    disconnect();
    return out;
  };

  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    return violation("bad-message", "not a JSON object");
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return violation("bad-message", "message needs a string \"type\"");
  }
  if (!msg.contains("t_us") || !msg["t_us"].is_number_integer()) {
    return violation("bad-message", "message needs an integer \"t_us\"");
  }
  const std::string type = msg["type"];

  if (!greeted_) {
    if (type != "hello") return violation("handshake-required", "first message must be hello");
    if (!msg.contains("protocol") || msg["protocol"] != kProtocolVersion) {
      return violation("unsupported-protocol", "server speaks protocol 1");
    }
    greeted_ = true;
    ordered_json layout = ordered_json::parse(layout_to_json(layout_));
    layout.erase("version");
    ordered_json reply{{"type", "layout"}, {"t_us", clock_}};
    for (auto& [k, v] : layout.items()) reply[k] = v;
    out.messages.push_back(reply.dump());
    return out;
  }

  if (type == "hello") {
    out.messages.push_back(error_message("out-of-phase", "already greeted", clock_));
  } else if (type == "start_session") {
    if (phase_ != LivePhase::Idle) {
      out.messages.push_back(error_message("out-of-phase", "a session is already running", clock_));
    } else {
      begin_session(clock_);
      advance(clock_, out);
    }
  } else if (type == "gaze") {
    std::optional<Point> point;
    std::optional<double> pupil;
    const bool has_x = msg.contains("x_px") && !msg["x_px"].is_null();
    const bool has_y = msg.contains("y_px") && !msg["y_px"].is_null();
    if (has_x != has_y) return violation("bad-message", "gaze needs both or neither of x_px, y_px");
    if (has_x) {
      if (!msg["x_px"].is_number() || !msg["y_px"].is_number()) return violation("bad-message", "gaze coordinates must be numbers");
      point = Point{msg["x_px"].get<double>(), msg["y_px"].get<double>()};
      if (!std::isfinite(point->x) || !std::isfinite(point->y)) return violation("bad-message", "non-finite gaze");
    }
    if (msg.contains("pupil_mm") && !msg["pupil_mm"].is_null()) {
      if (!msg["pupil_mm"].is_number()) return violation("bad-message", "pupil_mm must be a number");
      const double p = msg["pupil_mm"].get<double>();
      if (!(p > 0.0 && p < 10.0)) return violation("bad-message", "pupil_mm must lie in (0, 10)");
      pupil = p;
    }
    on_gaze(point, pupil, clock_, out);
  } else if (type == "ack") {
    if (phase_ != LivePhase::Deciding) {
      out.messages.push_back(error_message("out-of-phase", "nothing to acknowledge", clock_));
    } else if (trial_index_ < cfg_.trials) {
      begin_trial(clock_, out);
      advance(clock_, out);
    } else {
      phase_ = LivePhase::Idle;
    }
  } else {
    return violation("unknown-type", "unknown message type '" + type + "'");
  }
  return out;
}

}  // namespace hybridfuse
