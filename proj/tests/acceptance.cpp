// Acceptance suite: one PASS/FAIL line per primary criterion.
#include "hybridfuse/errors.hpp"
#include "hybridfuse/live_session.hpp"
#include "hybridfuse/pipeline.hpp"
#include "hybridfuse/simulator.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace hybridfuse;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hf_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Calibration and online sessions come from different seeds so the model
// never sees the trials it classifies.
SimConfig battery_config() {
  SimConfig cfg;
  cfg.subjects = 5;
  cfg.trials = 9;
  cfg.p_on_target = 0.9;
  cfg.gaze_sigma_px = 40.0;
  cfg.eeg_separation = 3.0;
  cfg.seed = 2024;
  return cfg;
}

Verdict fusion_battery() {
  const auto start = std::chrono::steady_clock::now();
  const SimConfig calib = battery_config();
  SimConfig online = calib;
  online.seed = calib.seed + 1;
  online.labeled = false;
  Tally fused, eeg, et;
  for (int s = 0; s < calib.subjects; ++s) {
    const GnbModel model = train_on_session(synth_subject(calib, s));
    const SessionOutcome o = classify_session(synth_subject(online, s), model, FusionConfig{});
    for (auto [total, part] : {std::pair{&fused, &o.fused}, {&eeg, &o.eeg_only}, {&et, &o.et_only}}) {
      total->correct += part->correct;
      total->scored += part->scored;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = eeg.accuracy() >= 0.9 && et.accuracy() >= 0.9 &&
                    fused.accuracy() >= std::max(eeg.accuracy(), et.accuracy()) && secs < 10.0 && fused.scored == 45;
  return {pass, fmt("eeg %.3f et %.3f fused %.3f over %zu trials in %.2f s", eeg.accuracy(), et.accuracy(),
                    fused.accuracy(), fused.scored, secs)};
}

Verdict diverted_attention() {
  SimConfig cfg = battery_config();
  const GnbModel model = train_on_session(synth_subject(cfg, 0));
  // subject attends to AOI 6 while the prompted target is AOI 2
  std::vector<TrialScript> scripts{TrialScript{2, 6}};
  SimConfig online = cfg;
  online.seed = 77;
  const Session s = synth_subject(online, 0, scripts);
  const auto o = classify_session(s, model, FusionConfig{});
  const auto& t = o.trials.at(0);
  const auto& d = t.record.decision;
  const bool pass = d.chosen_aoi == 6 && t.eeg_only == 6 && t.et_only == 6 && d.mode == DecisionMode::Fused;
  return {pass, fmt("fused %d (%s) eeg %d et %d, truth 2", d.chosen_aoi.value_or(0),
                    std::string(to_string(d.mode)).c_str(), t.eeg_only, t.et_only.value_or(0))};
}

Verdict degeneracy_laws() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> kd(2, 12);
  int zero_ok = 0, high_ok = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(kd(rng));
    std::vector<double> eeg(k), et(k);
    for (auto& v : eeg) v = u(rng);
    for (auto& v : et) v = 0.95 * u(rng);
    FusionConfig cfg;
    cfg.threshold = 0.0;
    const auto z = fuse(eeg, et, cfg);
    zero_ok += z.chosen_aoi == argmax_id(eeg) ? 1 : 0;

    cfg.threshold = std::nextafter(*std::max_element(et.begin(), et.end()), 1.0);
    const auto h = fuse(eeg, et, cfg);
    high_ok += (h.chosen_aoi == argmax_id(eeg) && h.mode == DecisionMode::FallbackEeg) ? 1 : 0;
  }
  return {zero_ok == n && high_ok == n, fmt("threshold 0: %d/%d, threshold above max: %d/%d", zero_ok, n, high_ok, n)};
}

Verdict gnb_oracle() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> mean(-3, 3), var(0.1, 4), prior(0.05, 0.95), x(-4, 4);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    GnbModel m;
    const double p = prior(rng);
    m.priors = {p, 1 - p};
    const auto D = static_cast<std::size_t>(dim(rng));
    for (auto c : {0, 1}) {
      for (std::size_t d = 0; d < D; ++d) {
        m.means[static_cast<std::size_t>(c)].push_back(mean(rng));
        m.variances[static_cast<std::size_t>(c)].push_back(var(rng));
      }
    }
    std::vector<double> pt(D);
    for (double& v : pt) v = x(rng);
    const ScorePair s = bayes_scores(m, pt);
    for (auto c : {0, 1}) {
      const auto cu = static_cast<std::size_t>(c);
      long double prod = m.priors[cu];
      for (std::size_t d = 0; d < D; ++d) {
        const long double v = m.variances[cu][d];
        const long double r = pt[d] - static_cast<long double>(m.means[cu][d]);
        prod *= std::exp(-r * r / (2 * v)) / std::sqrt(2 * std::numbers::pi_v<long double> * v);
      }
      const double oracle = static_cast<double>(std::log(prod));
      const double got = c == 0 ? s.log_target : s.log_nontarget;
      worst = std::max(worst, std::abs(got - oracle) / std::max(1.0, std::abs(oracle)));
    }
  }
  return {worst <= 1e-9, fmt("worst relative error %.3g", worst)};
}

Verdict ellipse_calibration() {
  std::mt19937_64 rng(31);
  const double sigma = 25.0;
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<Point> pts(100000);
  for (auto& p : pts) p = {500 + n(rng), 400 + n(rng)};
  const auto e = confidence_ellipse(pts, 0.95);
  std::size_t inside = 0;
  for (const auto& p : pts) inside += e.contains(p) ? 1 : 0;
  const double coverage = static_cast<double>(inside) / static_cast<double>(pts.size());
  const double expected = 5.9915 * std::numbers::pi * sigma * sigma;
  const double area_err = std::abs(e.area - expected) / expected;
  return {std::abs(coverage - 0.95) <= 0.01 && area_err <= 0.03,
          fmt("coverage %.4f, area error %.2f%%", coverage, 100 * area_err)};
}

Verdict gaze_ratio_properties() {
  std::mt19937_64 rng(8);
  const AoiLayout layout = default_layout();
  std::uniform_real_distribution<double> ux(-100, layout.screen_w + 100), uy(-100, layout.screen_h + 100);
  std::bernoulli_distribution inside_only(0.3), drop(0.1);
  int bounded = 0, iff = 0, perm = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const bool confine = inside_only(rng);
    std::vector<GazeSample> g;
    for (int j = 0; j < 200; ++j) {
      GazeSample s;
      s.t = j;
      Point p{ux(rng), uy(rng)};
      if (confine) p = layout.aois[static_cast<std::size_t>(j) % layout.size()].rect.center();
      if (!drop(rng)) s.left = p;
      if (!drop(rng)) s.right = p;
      g.push_back(s);
    }
    const auto et = aoi_confidences(g, layout);
    bounded += et.sum() <= 1.0 + 1e-12 ? 1 : 0;
    std::size_t outside = 0;
    for (const auto& s : g) {
      if (auto p = mono_point(s)) outside += hit_aoi(*p, layout) ? 0 : 1;
    }
    iff += ((std::abs(et.sum() - 1.0) <= 1e-12) == (outside == 0)) ? 1 : 0;
    auto shuffled = g;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    perm += aoi_confidences(shuffled, layout).scores == et.scores ? 1 : 0;
  }
  return {bounded == n && iff == n && perm == n,
          fmt("sum<=1 %d/%d, equality iff no outside points %d/%d, permutation-exact %d/%d", bounded, n, iff, n, perm, n)};
}

Verdict pupil_recovery() {
  SimConfig cfg = battery_config();
  cfg.pupil_baseline_mm = 3.1552;
  cfg.pupil_elevation_mm = 3.2945 - 3.1552;
  cfg.pupil_noise_mm = 0.05;
  cfg.feature_dim = 4;
  const Session s = synth_subject(cfg, 0);
  const auto p = pupil_summary(s.all_gaze(), s.windows());
  const double diff = p.trial_median - p.intertrial_median;
  return {std::abs(diff - 0.1393) <= 0.01,
          fmt("trial %.4f mm, inter-trial %.4f mm, difference %.4f mm", p.trial_median, p.intertrial_median, diff)};
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Verdict report_shape() {
  const fs::path dir = scratch("report");
  const SimConfig cfg = battery_config();
  SimConfig online = cfg;
  online.seed = 99;
  const Session s = synth_subject(online, 0);
  const auto o = classify_session(s, train_on_session(synth_subject(cfg, 0)), FusionConfig{});
  const ReportSummary summary = export_report(o.records(), analyze_session(s), dir);

  bool shape = true;
  for (const char* f : {"scores_et.csv", "scores_eeg.csv"}) {
    const auto lines = read_lines(dir / f);
    shape &= lines.size() == 10;
    for (std::size_t i = 1; i < lines.size(); ++i) shape &= std::count(lines[i].begin(), lines[i].end(), ',') == 7;
  }
  const auto decisions = read_lines(dir / "decisions.csv");
  std::size_t correct = 0, scored = 0;
  for (std::size_t i = 1; i < decisions.size(); ++i) {
    const char last = decisions[i].back();
    scored += (last == '0' || last == '1') ? 1 : 0;
    correct += last == '1' ? 1 : 0;
  }
  const double file_acc = scored ? static_cast<double>(correct) / static_cast<double>(scored) : 0.0;
  const auto summary_lines = read_lines(dir / "summary.txt");
  const bool printed = !summary_lines.empty() && summary_lines[0] == summary.text();
  fs::remove_all(dir);
  return {shape && decisions.size() == 10 && file_acc == summary.accuracy() && printed,
          fmt("9x7 matrices %s, decisions.csv accuracy %.4f vs summary %.4f", shape ? "ok" : "wrong", file_acc,
              summary.accuracy())};
}

Verdict record_replay() {
  const fs::path root = scratch("live");
  SimConfig calib;
  calib.trials = 6;
  const GnbModel model = train_on_session(synth_subject(calib, 0));
  const AoiLayout layout = default_layout();
  LiveConfig cfg;
  cfg.trials = 4;
  cfg.repetitions = 3;
  cfg.targets = {1, 7, 3, 5};
  cfg.record_root = root;
  LiveSession live(cfg, layout, model);

  using nlohmann::json;
  TimestampUs now = 500'000;
  live.handle_line(json{{"type", "hello"}, {"t_us", 0}, {"protocol", 1}}.dump(), now);
  live.handle_line(json{{"type", "start_session"}, {"t_us", 0}}.dump(), now);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 30.0);
  for (int guard = 0; guard < 100000 && live.phase() != LivePhase::Idle; ++guard) {
    if (live.phase() == LivePhase::Deciding) {
      live.handle_line(json{{"type", "ack"}, {"t_us", now}}.dump(), now);
      continue;
    }
    const AoiId target = cfg.targets[static_cast<std::size_t>(live.current_trial() - 1)];
    const Point c = layout.at(target).rect.center();
    json g{{"type", "gaze"}, {"t_us", now}, {"pupil_mm", 3.3}};
    if (guard % 17 != 0) {
      g["x_px"] = c.x + jitter(rng);
      g["y_px"] = c.y + jitter(rng);
    }
    live.handle_line(g.dump(), now);
    now += 16667;
    live.tick(now);
  }
  if (!live.session_dir()) return {false, "no session directory recorded"};
  const Session loaded = load_session(*live.session_dir()).session;
  const auto offline = classify_session(loaded, model, cfg.fusion);
  std::size_t same = 0;
  for (std::size_t i = 0; i < offline.trials.size() && i < live.decisions().size(); ++i) {
    same += offline.trials[i].record.decision == live.decisions()[i] ? 1 : 0;
  }
  fs::remove_all(root);
  return {same == 4 && offline.trials.size() == 4 && live.decisions().size() == 4,
          fmt("%zu/%zu live decisions reproduced offline", same, live.decisions().size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"fusion-battery", fusion_battery},
      {"diverted-attention", diverted_attention},
      {"fusion-degeneracy-laws", degeneracy_laws},
      {"gnb-oracle-equivalence", gnb_oracle},
      {"ellipse-calibration", ellipse_calibration},
      {"gaze-ratio-properties", gaze_ratio_properties},
      {"pupil-recovery", pupil_recovery},
      {"report-shape", report_shape},
      {"record-replay", record_replay},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
