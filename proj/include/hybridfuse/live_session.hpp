#pragma once

#include "hybridfuse/core.hpp"
#include "hybridfuse/eeg_classifier.hpp"
#include "hybridfuse/fusion.hpp"
#include "hybridfuse/session_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybridfuse {

inline constexpr int kProtocolVersion = 1;

enum class LivePhase { Idle, Calibrating, TrialRunning, Deciding };
std::string_view to_string(LivePhase phase);

struct LiveConfig {
  int trials{7};
  int repetitions{10};
  int flash_ms{100};
  int isi_ms{75};
  double eeg_separation{3.0};  // scripted EEG, there is no amplifier
  std::vector<AoiId> targets;  // per-trial script; empty cycles through 1..K
  FusionConfig fusion;
  std::uint64_t seed{1};
  std::optional<std::filesystem::path> record_root;  // sessions are persisted here when set

  void validate() const;
};

// Transport-independent trial state machine of the live service. Every
// input carries the service clock `now` in microseconds; outputs are
// newline-free JSON strings, one per wire message.
//
// Wire protocol (newline-delimited JSON, every object has "type" and "t_us"):
//   client -> server: hello{protocol}, start_session{}, gaze{x_px?, y_px?,
//                     pupil_mm?}, ack{}
//   server -> client: layout{screen_w, screen_h, aois[]}, trial_start{trial,
//                     target_word}, flash{aoi_id, duration_ms}, trial_end{trial},
//                     decision{trial, aoi_id, word, mode, c_et[], c_eeg[]},
//                     error{code, detail}
class LiveSession {
public:
  struct Reply {
    std::vector<std::string> messages;
    bool close{false};
  };

  LiveSession(LiveConfig cfg, AoiLayout layout, GnbModel model);

  Reply handle_line(std::string_view line, TimestampUs now);
  Reply tick(TimestampUs now);
  // Client went away: an unfinished trial is discarded.
  void disconnect();

  // When tick() next has work to do.
  std::optional<TimestampUs> next_deadline() const;

  LivePhase phase() const { return phase_; }
  int current_trial() const { return trial_index_; }
  const Session& recorded() const { return recorded_; }
  const std::vector<FusionDecision>& decisions() const { return decisions_; }
  const std::optional<std::filesystem::path>& session_dir() const { return session_dir_; }
  const GnbModel& model() const { return model_; }
  const LiveConfig& config() const { return cfg_; }

private:
  void begin_session(TimestampUs now);
  void begin_trial(TimestampUs now, Reply& out);
  void finish_trial(Reply& out);
  void advance(TimestampUs now, Reply& out);
  void on_gaze(std::optional<Point> point, std::optional<double> pupil, TimestampUs now, Reply& out);
  std::string error_message(std::string_view code, std::string_view detail, TimestampUs now) const;
  void persist();

  LiveConfig cfg_;
  AoiLayout layout_;
  GnbModel model_;

  LivePhase phase_{LivePhase::Idle};
  bool greeted_{false};
  int sessions_started_{0};
  int trial_index_{0};
  TimestampUs clock_{0};
  std::vector<AoiId> flash_order_;
  std::size_t next_flash_{0};
  TrialBundle current_;
  Session recorded_;
  std::vector<FusionDecision> decisions_;
  std::optional<std::filesystem::path> session_dir_;
};

}  // namespace hybridfuse
