// engage: simulate / replay / serve / calibrate / analyze / report.
//
// Exit codes: 0 success, 2 config error, 3 input error, 4 runtime failure.
// Every flag can also be set through ENGAGE_<FLAG_NAME>.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "engage/analysis.hpp"
#include "engage/calibration.hpp"
#include "engage/ingest.hpp"
#include "engage/pipeline.hpp"
#include "engage/serialization.hpp"
#include "engage/server.hpp"
#include "engage/synth.hpp"

namespace {

using namespace engage;

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitRuntime = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_name(const std::string& flag) {
  std::string out = "ENGAGE_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return out;
}

template <typename T>
CLI::Option* flag_opt(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)->envname(env_name(name));
}

CLI::Option* bool_flag(CLI::App* app, const std::string& name, bool& value,
                       const std::string& help) {
  return app->add_flag("--" + name, value, help)->envname(env_name(name));
}

// Engine and front-end options shared by every pipeline-running subcommand.
struct EngineFlags {
  std::string params_file;
  std::optional<std::uint64_t> window_ms;
  std::optional<double> theta;
  unsigned persistence = consistency::kDefaultPersistence;
  bool no_smoothing = false;

  void attach(CLI::App* app) {
    flag_opt(app, "params", params_file, "EngineParams JSON file");
    flag_opt(app, "window-ms", window_ms, "Window length in milliseconds");
    flag_opt(app, "theta", theta, "Confidence threshold (keep confidence > theta)");
    flag_opt(app, "persistence", persistence, "Label persistence m (frames)");
    bool_flag(app, "no-smoothing", no_smoothing, "Bypass per-track label smoothing");
  }

  pipeline::PipelineOptions resolve() const {
    try {
      pipeline::PipelineOptions o;
      if (!params_file.empty()) o.params = load_params_file(params_file);
      if (window_ms) o.params.window_ms = *window_ms;
      if (theta) o.params.theta = *theta;
      validate_params(o.params);
      if (persistence == 0) throw ValidationError("persistence must be positive");
      o.persistence = persistence;
      o.smoothing = !no_smoothing;
      return o;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path);
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

std::vector<synth::SegmentSpec> specs_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("segment spec file must be a JSON array");
  std::vector<synth::SegmentSpec> out;
  for (const auto& item : j) {
    synth::SegmentSpec s;
    const auto& mix = item.at("mix");
    s.mix = synth::StudentMix::of(mix.value("active", 0.0), mix.value("attentive", 0.0),
                                  mix.value("passive", 0.0), mix.value("disengaged", 0.0),
                                  item.value("students", 30u));
    s.duration_ms = item.value("duration_ms", s.duration_ms);
    s.fps = item.value("fps", s.fps);
    s.cameras = item.value("cameras", s.cameras);
    s.seed = item.value("seed", std::uint64_t{0});
    synth::validate_mix(s.mix);
    out.push_back(s);
  }
  return out;
}

// ---- simulate -------------------------------------------------------------

struct SimulateCmd {
  EngineFlags engine;
  std::string preset = "paper-session";
  std::string spec_file;
  std::uint64_t seed = 1;
  bool noise = true;
  unsigned students = 30;
  double fps = 25.0;
  unsigned cameras = 1;
  std::string out;
  std::string truth_out;
  std::string report_out;
  std::size_t corpus = 0;

  void attach(CLI::App* app) {
    engine.attach(app);
    auto* p = flag_opt(app, "preset", preset, "Built-in session preset")
                  ->check(CLI::IsMember({"paper-session"}));
    flag_opt(app, "spec", spec_file, "JSON array of segment specs")->excludes(p);
    flag_opt(app, "seed", seed, "Generator seed");
    app->add_flag("--noise,!--no-noise", noise, "Inject classifier confusion noise")
        ->envname("ENGAGE_NOISE");
    flag_opt(app, "students", students, "Students per segment");
    flag_opt(app, "fps", fps, "Frames per second");
    flag_opt(app, "cameras", cameras, "Camera count");
    flag_opt(app, "out", out, "Event log (or corpus) output path");
    flag_opt(app, "truth", truth_out, "Per-segment ground truth output path");
    flag_opt(app, "report", report_out, "SessionReport output path ('-' for stdout)");
    flag_opt(app, "corpus", corpus,
             "Write N stratified labeled segments to --out instead of a session");
  }

  int run() {
    const auto opts = engine.resolve();
    if (corpus > 0) {
      if (out.empty()) throw ConfigError("--corpus requires --out");
      pipeline::CorpusSpec cs;
      cs.segments = corpus;
      cs.seed = seed;
      cs.students = students;
      cs.fps = fps;
      cs.noise = noise;
      const auto segments = pipeline::build_corpus(cs, opts);
      calibration::write_corpus(out, segments);
      std::cerr << "wrote " << segments.size() << " segments to " << out << "\n";
      return 0;
    }
    std::vector<synth::SegmentSpec> specs;
    try {
      specs = spec_file.empty() ? synth::paper_session_preset(seed, students, fps, cameras)
                                : specs_from_json(load_json_file(spec_file));
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    const auto session =
        synth::generate_session(specs, noise, synth::derive_seed(seed, 0xa11ce));
    if (!out.empty()) ingest::write_events(out, session.events);
    if (!truth_out.empty()) {
      Json t = Json::array();
      for (std::size_t i = 0; i < session.truths.size(); ++i) {
        t.push_back({{"start_ms", session.segment_start_ms[i]},
                     {"truth", to_string(session.truths[i])}});
      }
      write_text(truth_out, t.dump(2) + "\n");
    }
    if (out.empty() || !report_out.empty()) {
      const auto result = pipeline::run_events(session.events, opts);
      write_text(report_out, format_report(result.report));
    }
    return 0;
  }
};

// ---- replay ---------------------------------------------------------------

struct ReplayCmd {
  EngineFlags engine;
  std::string path;
  double speed = 0.0;
  std::string report_out;
  std::string windows_out;
  std::string stats_out;

  void attach(CLI::App* app) {
    engine.attach(app);
    flag_opt(app, "replay", path, "Event log to replay")->required();
    flag_opt(app, "speed", speed, "Replay rate multiplier (0 = as fast as possible)")
        ->check(CLI::NonNegativeNumber);
    flag_opt(app, "report", report_out, "SessionReport output path ('-' for stdout)");
    flag_opt(app, "windows", windows_out, "Window log output path");
    flag_opt(app, "stats", stats_out, "Drop statistics output path");
  }

  int run() {
    const auto opts = engine.resolve();
    std::optional<ingest::ReplayReader> reader;
    try {
      reader.emplace(path, speed);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    std::ofstream wlog;
    if (!windows_out.empty()) {
      wlog.open(windows_out, std::ios::binary | std::ios::trunc);
      if (!wlog) throw std::runtime_error("cannot write " + windows_out);
    }
    ingest::StreamMerger merger(opts.params.window_ms, opts.params.theta);
    const auto source = merger.add_source();
    pipeline::Pipeline pipe(opts);
    if (wlog.is_open()) {
      pipe.set_window_sink([&](const WindowAggregate& w) { wlog << format_window_line(w) << '\n'; });
    }
    for (;;) {
      std::optional<DetectionEvent> e;
      try {
        e = reader->next();
      } catch (const std::exception& ex) {
        throw InputError(ex.what());
      }
      if (!e) break;
      pipe.process_all(merger.push(source, *e));
    }
    pipe.process_all(merger.finish());
    if (pipe.session().windows().empty()) throw InputError("no windows");
    if (wlog.is_open() && !wlog.flush()) throw std::runtime_error("cannot write " + windows_out);
    const auto s = merger.stats();
    const Json stats{{"accepted", s.accepted},
                     {"below_theta", s.below_theta},
                     {"out_of_order", s.out_of_order},
                     {"late", s.late}};
    if (!stats_out.empty()) write_text(stats_out, stats.dump(2) + "\n");
    write_text(report_out, format_report(pipe.report()));
    return 0;
  }
};

// ---- serve ----------------------------------------------------------------

std::atomic<server::Server*> g_server{nullptr};

struct ServeCmd {
  EngineFlags engine;
  std::string listen = "127.0.0.1:7400";
  std::string feed = "127.0.0.1:7401";
  std::string persist_dir;
  std::uint64_t idle_exit_ms = 0;
  std::string report_out;

  void attach(CLI::App* app) {
    engine.attach(app);
    flag_opt(app, "listen", listen, "Producer endpoint host:port");
    flag_opt(app, "feed", feed, "Window feed endpoint host:port");
    flag_opt(app, "persist-dir", persist_dir, "Directory for event/window logs and report");
    flag_opt(app, "idle-exit-ms", idle_exit_ms,
             "Shut down this long after the last producer disconnects (0 = never)");
    flag_opt(app, "report", report_out, "SessionReport output path ('-' for stdout)");
  }

  int run() {
    server::ServerOptions so;
    try {
      so.listen = net::parse_endpoint(listen);
      so.feed = net::parse_endpoint(feed);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    so.pipeline = engine.resolve();
    if (!persist_dir.empty()) so.persist_dir = persist_dir;
    so.idle_exit = std::chrono::milliseconds(idle_exit_ms);

    // Signals are waited for on a dedicated thread, never handled async.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    server::Server srv(so);
    std::cerr << "listening on " << so.listen.host << ":" << srv.event_port() << ", feed on "
              << so.feed.host << ":" << srv.feed_port() << std::endl;
    std::atomic<bool> done{false};
    std::thread waiter([&] {
      while (!done) {
        timespec ts{0, 100'000'000};
        if (sigtimedwait(&set, nullptr, &ts) > 0) {
          srv.stop();
          return;
        }
      }
    });
    SessionReport report;
    try {
      report = srv.run();
    } catch (...) {
      done = true;
      waiter.join();
      throw;
    }
    done = true;
    waiter.join();
    std::cerr << to_json(srv.stats()).dump() << std::endl;
    write_text(report_out, format_report(report));
    return 0;
  }
};

// ---- calibrate ------------------------------------------------------------

struct CalibrateCmd {
  EngineFlags engine;
  std::string segments_file;
  std::string grid_file;
  std::size_t folds = 5;
  std::size_t top_k = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;

  void attach(CLI::App* app) {
    engine.attach(app);
    flag_opt(app, "segments", segments_file, "Labeled segment corpus (JSON lines)")->required();
    flag_opt(app, "grid", grid_file, "Candidate grid JSON {\"anger\": [...], ...}");
    flag_opt(app, "folds", folds, "Cross-validation folds");
    flag_opt(app, "top-k", top_k, "Grid candidates passed to cross-validation");
    flag_opt(app, "seed", seed, "Fold assignment seed");
    flag_opt(app, "threads", threads, "Worker threads (0 = hardware)");
    flag_opt(app, "out", out, "Result JSON path ('-' for stdout)");
  }

  int run() {
    const auto opts = engine.resolve();
    calibration::WeightCandidateGrid grid;
    try {
      grid = grid_file.empty() ? calibration::WeightCandidateGrid::defaults()
                               : calibration::grid_from_json(load_json_file(grid_file));
      calibration::validate_grid(grid);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    std::vector<calibration::LabeledSegment> segments;
    try {
      segments = calibration::read_corpus(segments_file);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    if (segments.empty()) throw InputError("no segments");

    const auto search = calibration::grid_search_weights(grid, segments, opts.params, threads);
    std::vector<EmotionVector> candidates;
    for (std::size_t i = 0; i < search.ranked.size() && i < top_k; ++i) {
      candidates.push_back(search.ranked[i].beta);
    }
    const auto cv = calibration::cross_validate(candidates, segments, opts.params, folds, seed);

    EngineParams tuned = opts.params;
    tuned.beta = cv.beta;
    const auto fit = calibration::find_thresholds(calibration::score_segments(segments, tuned));
    tuned.thresholds = fit.thresholds;

    auto named = [](const EmotionVector& beta) {
      Json j = Json::object();
      for (Emotion e : kAllEmotions) j[std::string(to_string(e))] = beta[slot(e)];
      return j;
    };
    Json ranked = Json::array();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      ranked.push_back({{"beta", named(search.ranked[i].beta)},
                        {"mean_f1", search.ranked[i].mean_f1}});
    }
    Json result{{"ranked_weights", ranked},
                {"cv_f1", {{"beta", named(cv.beta)}, {"mean", cv.mean_f1}, {"folds", cv.fold_f1}}},
                {"thresholds",
                 {{"t1", fit.thresholds.t1},
                  {"t2", fit.thresholds.t2},
                  {"t3", fit.thresholds.t3},
                  {"accuracy", fit.accuracy}}},
                {"evaluation_count", search.evaluation_count},
                {"params", to_json(tuned)}};
    write_text(out, result.dump(2) + "\n");
    return 0;
  }
};

// ---- analyze --------------------------------------------------------------

struct AnalyzeCmd {
  EngineFlags engine;
  std::string mode = "metrics";
  std::string corpus_file;
  std::string fit_file;
  bool refit = false;
  double fraction = 0.2;
  double eps = 0.02;
  std::uint64_t seed = 1;
  std::string out;

  void attach(CLI::App* app) {
    engine.attach(app);
    flag_opt(app, "mode", mode,
             "metrics | perturb-weights | perturb-thresholds | ablate | smoothing")
        ->check(CLI::IsMember(
            {"metrics", "perturb-weights", "perturb-thresholds", "ablate", "smoothing"}));
    flag_opt(app, "corpus", corpus_file, "Evaluation corpus (JSON lines)");
    flag_opt(app, "fit", fit_file, "Corpus used to re-derive thresholds");
    bool_flag(app, "refit", refit, "Re-derive thresholds on --fit for every evaluation");
    flag_opt(app, "fraction", fraction, "Weight perturbation fraction");
    flag_opt(app, "eps", eps, "Threshold shift");
    flag_opt(app, "seed", seed, "Preset seed for smoothing mode");
    flag_opt(app, "out", out, "Result JSON path ('-' for stdout)");
  }

  static std::vector<calibration::LabeledSegment> load(const std::string& path) {
    try {
      return calibration::read_corpus(path);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
  }

  int run() {
    const auto opts = engine.resolve();
    if (mode == "smoothing") {
      const auto specs = synth::paper_session_preset(seed);
      const auto session =
          synth::generate_session(specs, true, synth::derive_seed(seed, 0xa11ce));
      const auto truth = analysis::window_truths(session, opts.params.window_ms);
      const auto r = analysis::smoothing_ablation(session.events, opts, truth);
      Json j{{"raw_transitions", r.raw_transitions},
             {"smoothed_transitions", r.smoothed_transitions},
             {"reduction_ratio", r.reduction_ratio}};
      if (r.raw_metrics) j["raw_metrics"] = analysis::to_json(*r.raw_metrics);
      if (r.smoothed_metrics) j["smoothed_metrics"] = analysis::to_json(*r.smoothed_metrics);
      write_text(out, j.dump(2) + "\n");
      return 0;
    }
    if (corpus_file.empty()) throw ConfigError("--corpus is required for mode " + mode);
    if (refit && fit_file.empty()) throw ConfigError("--refit requires --fit");
    const auto eval = load(corpus_file);
    if (eval.empty()) throw InputError("no segments");
    const auto fit = fit_file.empty() ? std::vector<calibration::LabeledSegment>{} : load(fit_file);
    const analysis::CorpusEvaluator ev(
        fit, eval, opts.params,
        refit ? analysis::ThresholdPolicy::Refit : analysis::ThresholdPolicy::Fixed);

    Json j{{"thresholds", {ev.baseline().thresholds.t1, ev.baseline().thresholds.t2,
                           ev.baseline().thresholds.t3}},
           {"baseline", analysis::to_json(ev.baseline().metrics)}};
    if (mode == "perturb-weights") {
      Json w = Json::array();
      for (const auto& p : analysis::perturb_weights(ev, fraction)) {
        w.push_back({{"emotion", to_string(p.emotion)},
                     {"accuracy_minus", p.accuracy_minus},
                     {"accuracy_plus", p.accuracy_plus},
                     {"max_abs_delta", p.max_abs_delta}});
      }
      j["weights"] = w;
    } else if (mode == "perturb-thresholds") {
      try {
        const auto t = analysis::perturb_thresholds(ev, eps);
        Json shifts = Json::array();
        for (const auto& s : t.shifts) {
          shifts.push_back({{"shift", s.label}, {"accuracy", s.accuracy}});
        }
        j["threshold_shifts"] = shifts;
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
    } else if (mode == "ablate") {
      Json rows = Json::array();
      for (const auto& r : analysis::ablation_ranking(ev)) {
        Json recall = Json::object();
        for (EngagementState s : kAllStates) {
          recall[std::string(to_string(s))] = r.recall_reduction[ordinal(s)];
        }
        rows.push_back({{"emotion", to_string(r.emotion)},
                        {"accuracy", r.accuracy},
                        {"accuracy_reduction", r.accuracy_reduction},
                        {"recall_reduction", recall}});
      }
      j["ablation"] = rows;
    }
    write_text(out, j.dump(2) + "\n");
    return 0;
  }
};

// ---- report ---------------------------------------------------------------

struct ReportCmd {
  std::string input;

  void attach(CLI::App* app) {
    flag_opt(app, "input", input, "SessionReport JSON")->required();
  }

  int run() {
    SessionReport r;
    try {
      r = report_from_json(load_json_file(input));
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    std::printf("lambda_star      %.6f\n", r.lambda_star);
    std::printf("final_state      %s\n", std::string(to_string(r.final_state)).c_str());
    std::printf("transitions      %zu\n", r.transition_count);
    std::printf("windows          %zu\n\n", r.windows.size());
    std::printf("%8s %9s %10s %10s  %s\n", "window", "retained", "a_star", "a_smooth", "state");
    for (const auto& w : r.windows) {
      auto num = [](const std::optional<double>& v) {
        char buf[32];
        if (v) std::snprintf(buf, sizeof buf, "%.6f", *v);
        else std::snprintf(buf, sizeof buf, "-");
        return std::string(buf);
      };
      std::printf("%8llu %9llu %10s %10s  %s\n",
                  static_cast<unsigned long long>(w.window_index),
                  static_cast<unsigned long long>(w.retained_count), num(w.a_star).c_str(),
                  num(w.a_smooth).c_str(),
                  w.state_hint ? std::string(to_string(*w.state_hint)).c_str() : "-");
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classroom engagement scoring over detection event streams"};
  app.require_subcommand(1);

  SimulateCmd simulate;
  ReplayCmd replay;
  ServeCmd serve;
  CalibrateCmd calibrate;
  AnalyzeCmd analyze;
  ReportCmd report;
  auto* s1 = app.add_subcommand("simulate", "Generate a synthetic session and score it");
  auto* s2 = app.add_subcommand("replay", "Score a persisted event log");
  auto* s3 = app.add_subcommand("serve", "Score live producer connections");
  auto* s4 = app.add_subcommand("calibrate", "Grid-search weights and fit thresholds");
  auto* s5 = app.add_subcommand("analyze", "Metrics, sensitivity and ablation studies");
  auto* s6 = app.add_subcommand("report", "Print a SessionReport as a table");
  simulate.attach(s1);
  replay.attach(s2);
  serve.attach(s3);
  calibrate.attach(s4);
  analyze.attach(s5);
  report.attach(s6);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s1) return simulate.run();
    if (*s2) return replay.run();
    if (*s3) return serve.run();
    if (*s4) return calibrate.run();
    if (*s5) return analyze.run();
    if (*s6) return report.run();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    // "no windows" and malformed input surfacing from the library.
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
