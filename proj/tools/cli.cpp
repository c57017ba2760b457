#include "cli.hpp"

#include "hybridfuse/errors.hpp"
#include "hybridfuse/live_server.hpp"
#include "hybridfuse/pipeline.hpp"
#include "hybridfuse/simulator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <string>

namespace hybridfuse::cli {

namespace fs = std::filesystem;

namespace {

struct FusionFlags {
  double threshold{kDefaultFusionThreshold};
  std::string eeg_mode{"posterior"};
  std::string fallback{"eeg-argmax"};
  std::string aggregation{"mean"};
  std::string denominator{"all"};

  FusionConfig config() const {
    FusionConfig c;
    c.threshold = threshold;
    c.eeg_mode = eeg_mode == "literal" ? ConfidenceMode::Literal : ConfidenceMode::Posterior;
    c.fallback = fallback == "reject" ? FallbackPolicy::Reject : FallbackPolicy::EegArgmax;
    c.aggregation = aggregation == "logodds" ? AggregationMode::LogOddsSum : AggregationMode::Mean;
    c.denominator = denominator == "onscreen" ? EtDenominator::OnScreen : EtDenominator::AllValid;
    return c;
  }
};

void add_fusion_flags(CLI::App* cmd, FusionFlags& f) {
  cmd->add_option("--threshold", f.threshold, "minimum gaze ratio for a fused selection")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--eeg-mode", f.eeg_mode, "per-event confidence")
      ->check(CLI::IsMember({"literal", "posterior"}))
      ->capture_default_str();
  cmd->add_option("--fallback", f.fallback, "when no candidate has gaze support")
      ->check(CLI::IsMember({"eeg-argmax", "reject"}))
      ->capture_default_str();
  cmd->add_option("--aggregate", f.aggregation, "per-AOI aggregation")
      ->check(CLI::IsMember({"mean", "logodds"}))
      ->capture_default_str();
  cmd->add_option("--denominator", f.denominator, "gaze ratio denominator")
      ->check(CLI::IsMember({"all", "onscreen"}))
      ->capture_default_str();
}

// A model path may be one file for every session or a directory holding
// <session_id>.json per session.
GnbModel model_for(const fs::path& model_path, const Session& session) {
  if (fs::is_directory(model_path)) return load_model(model_path / (session.manifest.session_id + ".json"));
  return load_model(model_path);
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("HYBRIDFUSE_DATA_DIR"); env && *env) return env;
  return "hybridfuse_data";
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hybridfuse: gaze + EEG fusion decision engine"};
  app.name("hybridfuse");
  app.require_subcommand(1);

  // simulate
  SimConfig sim;
  std::string sim_out;
  bool unlabeled = false;
  auto* simulate = app.add_subcommand("simulate", "write synthetic sessions, one directory per subject");
  simulate->add_option("--out", sim_out, "output root")->required();
  simulate->add_option("--subjects", sim.subjects)->check(CLI::Range(1, 1000))->capture_default_str();
  simulate->add_option("--trials", sim.trials, "trials per subject")->check(CLI::Range(1, 100000))->capture_default_str();
  simulate->add_option("--aois", sim.aoi_count)->check(CLI::Range(2, 64))->capture_default_str();
  simulate->add_option("--reps", sim.repetitions, "flashes per AOI per trial")->check(CLI::Range(1, 1000))->capture_default_str();
  simulate->add_option("--sigma", sim.gaze_sigma_px, "gaze dispersion (px)")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--p-on-target", sim.p_on_target)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  simulate->add_option("--eeg-d", sim.eeg_separation, "target/non-target feature separation")->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate->add_option("--feature-dim", sim.feature_dim)->check(CLI::Range(1, 100000))->capture_default_str();
  simulate->add_option("--pupil-baseline", sim.pupil_baseline_mm)->capture_default_str();
  simulate->add_option("--pupil-elevation", sim.pupil_elevation_mm)->capture_default_str();
  simulate->add_option("--pupil-noise", sim.pupil_noise_mm)->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate->add_option("--dropout", sim.dropout)->check(CLI::Range(0.0, 0.999))->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_flag("--unlabeled", unlabeled, "omit is_target labels (online session)");

  // train
  std::string train_session;
  std::string train_out;
  bool no_standardize = false;
  auto* train = app.add_subcommand("train", "fit a GNB model per session");
  train->add_option("--session", train_session, "session directory or root of session directories")->required();
  train->add_option("--out", train_out, "model file (single session) or directory")->required();
  train->add_flag("--no-standardize", no_standardize, "skip per-dimension z-scoring");

  // classify / report
  std::string cls_session;
  std::string cls_model;
  std::string cls_out;
  FusionFlags cls_flags;
  auto* classify = app.add_subcommand("classify", "fused decisions for every trial, one summary line per session");
  classify->add_option("--session", cls_session)->required();
  classify->add_option("--model", cls_model, "model file or directory of <session_id>.json")->required();
  classify->add_option("--out", cls_out, "write a report per session under this directory");
  add_fusion_flags(classify, cls_flags);

  std::string rep_session;
  std::string rep_model;
  std::string rep_out;
  FusionFlags rep_flags;
  auto* report = app.add_subcommand("report", "classify and export score matrices, ellipses, pupil and overlay");
  report->add_option("--session", rep_session)->required();
  report->add_option("--model", rep_model)->required();
  report->add_option("--out", rep_out)->required();
  add_fusion_flags(report, rep_flags);

  // analyze
  std::string an_kind;
  std::string an_session;
  std::string an_out;
  AnalyticsOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "gaze, ellipse, pupil or heatmap analytics of one session");
  analyze->add_option("kind", an_kind)->required()->check(CLI::IsMember({"gaze", "ellipse", "pupil", "heatmap"}));
  analyze->add_option("--session", an_session)->required();
  analyze->add_option("--coverage", an_opts.coverage)->check(CLI::Range(0.01, 0.9999))->capture_default_str();
  analyze->add_option("--bin", an_opts.heatmap_bin, "heatmap bin (px)")->check(CLI::Range(1.0, 1e6))->capture_default_str();
  analyze->add_option("--sigma", an_opts.heatmap_sigma, "heatmap smoothing (px), 0 disables")->check(CLI::NonNegativeNumber)->capture_default_str();
  analyze->add_option("--out", an_out, "heatmap CSV output");

  // serve
  int port = 7300;
  std::string serve_model;
  std::string data_dir;
  int max_clients = 0;
  LiveConfig live;
  FusionFlags live_flags;
  auto* serve = app.add_subcommand("serve", "live trial service (newline-delimited JSON over TCP)");
  serve->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--model", serve_model, "model file; trained on a synthetic calibration session if omitted");
  serve->add_option("--trials", live.trials)->check(CLI::Range(1, 10000))->capture_default_str();
  serve->add_option("--reps", live.repetitions)->check(CLI::Range(1, 1000))->capture_default_str();
  serve->add_option("--flash-ms", live.flash_ms)->check(CLI::Range(1, 10000))->capture_default_str();
  serve->add_option("--isi-ms", live.isi_ms)->check(CLI::Range(0, 10000))->capture_default_str();
  serve->add_option("--eeg-d", live.eeg_separation, "scripted EEG separation")->check(CLI::NonNegativeNumber)->capture_default_str();
  serve->add_option("--targets", live.targets, "scripted target AOI per trial");
  serve->add_option("--seed", live.seed)->capture_default_str();
  serve->add_option("--data-dir", data_dir, "session root (default $HYBRIDFUSE_DATA_DIR or ./hybridfuse_data)");
  serve->add_option("--max-clients", max_clients, "exit after this many clients (0 = run forever)");
  add_fusion_flags(serve, live_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      sim.labeled = !unlabeled;
      for (const auto& dir : synth_session(sim, sim_out)) out << dir.string() << "\n";
      return 0;
    }

    if (*train) {
      const auto sessions = find_sessions(train_session);
      if (sessions.empty()) throw IoError("no sessions under " + train_session);
      const bool single = sessions.size() == 1 && is_session_dir(train_session);
      for (const auto& dir : sessions) {
        const Session s = load_session(dir).session;
        const GnbModel m = train_on_session(s, !no_standardize);
        const fs::path target = single && fs::path(train_out).extension() == ".json"
                                    ? fs::path(train_out)
                                    : fs::path(train_out) / (s.manifest.session_id + ".json");
        save_model(m, target);
        out << s.manifest.session_id << ": trained on " << labeled_features(s).size() << " events, D=" << m.dimension()
            << " -> " << target.string() << "\n";
      }
      return 0;
    }

    if (classify->parsed() || report->parsed()) {
      const bool is_report = report->parsed();
      const auto& session_root = is_report ? rep_session : cls_session;
      const auto& model_path = is_report ? rep_model : cls_model;
      const auto& out_root = is_report ? rep_out : cls_out;
      const FusionConfig cfg = (is_report ? rep_flags : cls_flags).config();

      const auto sessions = find_sessions(session_root);
      if (sessions.empty()) throw IoError("no sessions under " + session_root);
      Tally fused;
      Tally eeg;
      Tally et;
      for (const auto& dir : sessions) {
        const Session s = load_session(dir).session;
        const GnbModel m = model_for(model_path, s);
        const SessionOutcome o = classify_session(s, m, cfg);
        out << o.summary_line() << "\n";
        fused.correct += o.fused.correct;
        fused.scored += o.fused.scored;
        eeg.correct += o.eeg_only.correct;
        eeg.scored += o.eeg_only.scored;
        et.correct += o.et_only.correct;
        et.scored += o.et_only.scored;
        if (!out_root.empty()) {
          const auto records = o.records();
          const fs::path dest = sessions.size() == 1 && is_session_dir(session_root)
                                    ? fs::path(out_root)
                                    : fs::path(out_root) / s.manifest.session_id;
          const ReportSummary rs = export_report(records, analyze_session(s), dest);
          out << "  report " << dest.string() << ": " << rs.text() << "\n";
        }
      }
      if (sessions.size() > 1) {
        out << "overall: fused " << fused.correct << "/" << fused.scored << " (" << fmt(100.0 * fused.accuracy(), 1)
            << "%)  eeg " << eeg.correct << "/" << eeg.scored << " (" << fmt(100.0 * eeg.accuracy(), 1) << "%)  et "
            << et.correct << "/" << et.scored << " (" << fmt(100.0 * et.accuracy(), 1) << "%)\n";
      }
      return 0;
    }

    if (*analyze) {
      const Session s = load_session(an_session).session;
      if (an_kind == "gaze") {
        for (const TrialBundle& b : s.trials) {
          out << "trial " << b.trial << ":";
          try {
            const EtConfidence et = aoi_confidences(b.gaze, s.layout);
            const Point c = centroid(b.gaze);
            for (double v : et.scores) out << " " << fmt(v);
            out << "  centroid (" << fmt(c.x, 1) << ", " << fmt(c.y, 1) << ")  used " << et.n_used << " invalid "
                << et.n_invalid << "\n";
          } catch (const EmptyTrialError&) {
            out << " no valid gaze\n";
          }
        }
      } else if (an_kind == "ellipse") {
        for (const auto& t : analyze_session(s, an_opts).trials) {
          out << "trial " << t.trial << ": ";
          if (t.ellipse) {
            out << "center (" << fmt(t.ellipse->center.x, 1) << ", " << fmt(t.ellipse->center.y, 1) << ")  axes "
                << fmt(t.ellipse->semi_major, 2) << " x " << fmt(t.ellipse->semi_minor, 2) << "  angle "
                << fmt(t.ellipse->orientation) << "  area " << fmt(t.ellipse->area, 1) << " px^2\n";
          } else {
            out << "insufficient or degenerate gaze\n";
          }
        }
      } else if (an_kind == "pupil") {
        const PupilSummary p = pupil_summary(s.all_gaze(), s.windows());
        out << "trial median " << fmt(p.trial_median) << " mm (SD " << fmt(p.trial_sd) << ")\n";
        out << "inter-trial median " << fmt(p.intertrial_median) << " mm (SD " << fmt(p.intertrial_sd) << ")\n";
        out << "difference " << fmt(p.trial_median - p.intertrial_median) << " mm\n";
      } else {
        std::vector<GazeSample> gaze;
        for (const auto& b : s.trials) gaze.insert(gaze.end(), b.gaze.begin(), b.gaze.end());
        const HeatmapGrid g = heatmap(gaze, s.layout.screen_w, s.layout.screen_h, an_opts.heatmap_bin,
                                      an_opts.heatmap_sigma);
        out << "heatmap " << g.cols << "x" << g.rows << " bins, mass " << fmt(g.total_mass(), 3) << "\n";
        if (!an_out.empty()) {
          std::ofstream f(an_out);
          for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) f << (c ? "," : "") << format_real(g.at(c, r));
            f << "\n";
          }
          if (!f) throw IoError("cannot write " + an_out);
        }
      }
      return 0;
    }

    if (*serve) {
      live.fusion = live_flags.config();
      live.record_root = data_dir.empty() ? default_data_dir() : fs::path(data_dir);
      const AoiLayout layout = default_layout();
      GnbModel model;
      if (!serve_model.empty()) {
        model = load_model(serve_model);
      } else {
        SimConfig calib;
        calib.trials = 9;
        calib.eeg_separation = live.eeg_separation;
        calib.seed = live.seed;
        model = train_on_session(synth_subject(calib, 0));
      }
      LiveServer server(LiveSession(live, layout, model), {port, max_clients});
      const int bound = server.listen();
      out << "listening on 127.0.0.1:" << bound << ", recording to " << live.record_root->string() << std::endl;
      server.run();
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("hybridfuse");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hybridfuse::cli
