#include <doctest.h>

#include "hybridfuse/errors.hpp"
#include "hybridfuse/pipeline.hpp"
#include "hybridfuse/session_io.hpp"
#include "hybridfuse/simulator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hybridfuse;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("hf_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SimConfig small_config() {
  SimConfig cfg;
  cfg.trials = 3;
  cfg.repetitions = 2;
  cfg.feature_dim = 6;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("save and load round-trip") {
  TempDir tmp("roundtrip");
  const Session original = synth_subject(small_config(), 0);
  save_session(original, tmp.path / "a");
  const auto loaded = load_session(tmp.path / "a");
  CHECK(loaded.warnings.empty());
  const Session& s = loaded.session;

  CHECK(s.layout == original.layout);
  CHECK(s.trials == original.trials);
  CHECK(s.intertrial_gaze == original.intertrial_gaze);
  CHECK(s.manifest.session_id == original.manifest.session_id);
  REQUIRE(s.manifest.ground_truth.has_value());
  CHECK(s.manifest.ground_truth->size() == 3);
  CHECK(s.manifest.trial_windows.size() == 3);

  save_session(s, tmp.path / "b");
  CHECK(load_session(tmp.path / "b").session == s);
  for (const char* f : {"manifest.json", "layout.json", "gaze.csv", "events.csv", "features.csv"}) {
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }
}

TEST_CASE("absent values survive the round-trip") {
  TempDir tmp("absent");
  SimConfig cfg = small_config();
  cfg.dropout = 0.4;
  cfg.labeled = false;
  const Session original = synth_subject(cfg, 2);
  bool saw_missing = false;
  for (const auto& g : original.all_gaze()) saw_missing |= !g.left || !g.right;
  REQUIRE(saw_missing);
  save_session(original, tmp.path);
  const Session s = load_session(tmp.path).session;
  CHECK(s.trials == original.trials);
  CHECK(s.intertrial_gaze == original.intertrial_gaze);
}

TEST_CASE("empty trial list") {
  TempDir tmp("empty");
  Session s = synth_subject(small_config(), 0);
  s.trials.clear();
  save_session(s, tmp.path);
  const auto loaded = load_session(tmp.path);
  CHECK(loaded.session.trials.empty());
  CHECK_FALSE(loaded.session.intertrial_gaze.empty());
}

TEST_CASE("load_session rejects inconsistent sessions") {
  TempDir tmp("bad");
  const Session original = synth_subject(small_config(), 0);
  save_session(original, tmp.path);

  SUBCASE("shuffled gaze rows") {
    auto lines = lines_of(slurp(tmp.path / "gaze.csv"));
    std::swap(lines[5], lines[6]);
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    spit(tmp.path / "gaze.csv", text);
    CHECK_THROWS_AS(load_session(tmp.path), MonotonicityError);
  }
  SUBCASE("missing features file") {
    fs::remove(tmp.path / "features.csv");
    CHECK_THROWS_AS(load_session(tmp.path), CrossRefError);
  }
  SUBCASE("feature row for a missing event") {
    auto text = slurp(tmp.path / "features.csv");
    const auto lines = lines_of(text);
    // duplicate the last row with an out-of-range event index
    std::string row = lines.back();
    row.replace(row.find(',') + 1, row.find(',', row.find(',') + 1) - row.find(',') - 1, "999");
    spit(tmp.path / "features.csv", text + row + "\n");
    CHECK_THROWS_AS(load_session(tmp.path), CrossRefError);
  }
  SUBCASE("unknown manifest field") {
    auto text = slurp(tmp.path / "manifest.json");
    text.insert(text.find('{') + 1, "\"extra\":1,");
    spit(tmp.path / "manifest.json", text);
    CHECK_THROWS_AS(load_session(tmp.path), SchemaError);
  }
  SUBCASE("CR line endings") {
    auto text = slurp(tmp.path / "events.csv");
    text.insert(text.find('\n'), "\r");
    spit(tmp.path / "events.csv", text);
    CHECK_THROWS_AS(load_session(tmp.path), SchemaError);
  }
  SUBCASE("not a session") { CHECK_THROWS_AS(load_session(tmp.path / "nowhere"), IoError); }
}

TEST_CASE("writes into an unusable path raise IoError") {
  TempDir tmp("ro");
  spit(tmp.path / "plain_file", "x");
  const Session s = synth_subject(small_config(), 0);
  CHECK_THROWS_AS(save_session(s, tmp.path / "plain_file" / "session"), IoError);
  CHECK_THROWS_AS(save_model(GnbModel{}, tmp.path / "plain_file" / "m.json"), IoError);
}

TEST_CASE("model JSON round-trip") {
  const Session s = synth_subject(small_config(), 1);
  const GnbModel m = train_on_session(s, true);
  const GnbModel back = model_from_json(model_to_json(m));
  CHECK(back == m);
  CHECK_THROWS_AS(model_from_json("{\"version\":1}"), SchemaError);
  CHECK_THROWS_AS(model_from_json("not json"), SchemaError);

  TempDir tmp("model");
  save_model(m, tmp.path / "m.json");
  CHECK(load_model(tmp.path / "m.json") == m);
}

TEST_CASE("layout JSON round-trip") {
  const AoiLayout l = default_layout();
  CHECK(layout_from_json(layout_to_json(l)) == l);
}

TEST_CASE("find_sessions") {
  TempDir tmp("find");
  SimConfig cfg = small_config();
  cfg.subjects = 3;
  const auto dirs = synth_session(cfg, tmp.path);
  CHECK(find_sessions(tmp.path) == dirs);
  CHECK(find_sessions(dirs[1]) == std::vector<fs::path>{dirs[1]});
}

TEST_CASE("report export") {
  TempDir tmp("report");
  SimConfig cfg;
  cfg.feature_dim = 16;
  const Session train = synth_subject(cfg, 0);
  const Session test = synth_subject(cfg, 1);
  const auto outcome = classify_session(test, train_on_session(train), FusionConfig{});
  const auto records = outcome.records();
  const auto summary = export_report(records, analyze_session(test), tmp.path);

  for (const char* f : {"decisions.csv", "scores_et.csv", "scores_eeg.csv", "scores_eeg_log10.csv", "ellipse.csv",
                        "pupil.csv", "heatmap.csv", "overlay.svg", "summary.txt"}) {
    CHECK(fs::is_regular_file(tmp.path / f));
  }

  for (const char* f : {"scores_et.csv", "scores_eeg.csv"}) {
    const auto lines = lines_of(slurp(tmp.path / f));
    REQUIRE(lines.size() == 10);
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(std::count(lines[i].begin(), lines[i].end(), ',') == 7);
  }

  const auto decisions = lines_of(slurp(tmp.path / "decisions.csv"));
  REQUIRE(decisions.size() == 10);
  std::size_t correct = 0;
  for (std::size_t i = 1; i < decisions.size(); ++i) correct += decisions[i].back() == '1' ? 1 : 0;
  CHECK(correct == summary.correct);
  CHECK(summary.trials == 9);
  CHECK(slurp(tmp.path / "summary.txt") == summary.text() + "\n");

  CHECK_THROWS_AS(export_report({}, analyze_session(test), tmp.path / "none"), std::invalid_argument);
}

TEST_CASE("format_real round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 1920.0}) CHECK(std::stod(format_real(v)) == v);
}
