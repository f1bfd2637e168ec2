// Command-line front end: track / eval / oracle / simulate / ablate.
//
// Exit codes: 0 success, 2 input error (unreadable or malformed data),
// 3 configuration error (bad config file, profile, scenario, grid, or usage).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simpletrack/config.hpp"
#include "simpletrack/io.hpp"
#include "simpletrack/metrics.hpp"
#include "simpletrack/sim.hpp"
#include "simpletrack/tracker.hpp"

namespace st = simpletrack;

namespace {

// SIMPLETRACK_THREADS caps the sequence worker pool; 0 means auto.
int env_threads() {
  const char* v = std::getenv("SIMPLETRACK_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == nullptr || *end != '\0' || n < 1) {
    throw st::ConfigError(std::string("SIMPLETRACK_THREADS must be a positive "
                                      "integer, got '") +
                          v + "'");
  }
  return static_cast<int>(n);
}

st::tracker::TrackerConfig resolve_config(const std::string& spec) {
  if (st::config::is_profile(spec)) return st::config::profile(spec);
  return st::config::load(spec);
}

// Raw config text for overlaying ablation overrides. Profiles become a
// one-line reference so later `metric = ...` overrides still pick up the
// metric's own default gate.
std::string base_config_text(const std::string& spec) {
  if (st::config::is_profile(spec)) return "profile = " + spec + "\n";
  return st::io::read_text(spec);
}

std::string summary_line(const st::metrics::ClassReport& all) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "MOTA %.4f  MOTP %.4f  IDS %ld  FP %ld  FN %ld  recall %.4f",
                all.mota, all.motp, all.ids, all.fp, all.fn, all.recall);
  return buf;
}

struct TrackArgs {
  std::string dets, config, out;
};

void run_track(const TrackArgs& a) {
  const st::tracker::TrackerConfig cfg = resolve_config(a.config);
  const auto sequences = st::tracker::split_sequences(st::io::load_detections(a.dets));
  const st::tracker::TrackStream stream =
      st::tracker::process_sequences(sequences, cfg, env_threads());
  st::io::write_tracks(stream, a.out);
  std::cout << "tracked " << sequences.size() << " sequence(s), wrote "
            << stream.size() << " record(s) to " << a.out << "\n";
}

struct EvalArgs {
  std::string tracks, gt, report;
  bool interpolate = false;
  bool amota = false;
};

void run_eval(const EvalArgs& a) {
  st::tracker::TrackStream tracks = st::io::load_tracks(a.tracks);
  const auto gts = st::io::load_gt(a.gt);
  if (a.interpolate) tracks = st::metrics::interpolate_tracklets(tracks);
  const st::metrics::EvalReport report =
      st::metrics::evaluate(tracks, gts, {}, a.amota);
  st::io::write_text(st::metrics::format_report(report), a.report);
  std::cout << summary_line(report.all) << "\n";
  std::cout << "report written to " << a.report << "\n";
}

struct OracleArgs {
  std::string dets, gt, mode, out;
  std::string config = "wod";
};

void run_oracle(const OracleArgs& a) {
  const auto frames = st::io::load_detections(a.dets);
  const auto gts = st::io::load_gt(a.gt);
  st::tracker::TrackStream stream;
  if (a.mode == "gt-all") {
    stream = st::metrics::oracle_gt_all(frames, gts);
  } else {
    // gt-output: run the tracker with score/prediction output gating
    // disabled, then keep only frames that overlap a same-class GT box.
    st::tracker::TrackerConfig cfg = resolve_config(a.config);
    cfg.defaults.lifecycle.output_score = 0.0;
    cfg.defaults.lifecycle.output_predictions = true;
    for (auto& [cls, params] : cfg.per_class) {
      params.lifecycle.output_score = 0.0;
      params.lifecycle.output_predictions = true;
    }
    const auto sequences = st::tracker::split_sequences(frames);
    stream = st::tracker::process_sequences(sequences, cfg, env_threads());
    stream = st::metrics::oracle_gt_output(stream, gts);
  }
  st::io::write_tracks(stream, a.out);
  std::cout << "oracle " << a.mode << " wrote " << stream.size()
            << " record(s) to " << a.out << "\n";
}

struct SimulateArgs {
  std::string scenario, out_dets, out_gt;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a) {
  const st::sim::Scenario scenario = st::sim::load_scenario(a.scenario);
  const st::sim::SimResult result = st::sim::generate(scenario, a.seed);
  std::vector<st::Frame> frames;
  for (const auto& seq : result.sequences) {
    frames.insert(frames.end(), seq.begin(), seq.end());
  }
  st::io::write_detections(frames, a.out_dets);
  st::io::write_gt(result.gt, a.out_gt);
  std::cout << "simulated " << result.sequences.size() << " sequence(s), "
            << frames.size() << " frame(s), " << result.gt.size()
            << " gt record(s)\n";
}

struct AblateArgs {
  std::string dets, grid, out;
  std::string config = "wod";
  std::string gt;
};

struct GridVariant {
  std::string name;
  std::vector<std::string> overrides;  // "key=value" tokens
};

// Grid file: one variant per line, `<name> <key>=<value> [<key>=<value>...]`.
// '#' comments and blank lines are skipped. Values must not contain spaces.
std::vector<GridVariant> parse_grid(const std::string& text) {
  std::vector<GridVariant> variants;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    GridVariant v;
    if (!(tokens >> v.name)) continue;
    if (v.name.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
        std::string::npos) {
      throw st::ConfigError("grid line " + std::to_string(line_no) +
                            ": variant name '" + v.name +
                            "' must be [A-Za-z0-9_-]+");
    }
    std::string token;
    while (tokens >> token) {
      if (token.find('=') == std::string::npos) {
        throw st::ConfigError("grid line " + std::to_string(line_no) +
                              ": expected key=value, got '" + token + "'");
      }
      v.overrides.push_back(token);
    }
    variants.push_back(std::move(v));
  }
  if (variants.empty()) throw st::ConfigError("grid file defines no variants");
  return variants;
}

void run_ablate(const AblateArgs& a) {
  const std::string base_text = base_config_text(a.config);
  const std::vector<GridVariant> variants = parse_grid(st::io::read_text(a.grid));
  const auto sequences = st::tracker::split_sequences(st::io::load_detections(a.dets));
  std::vector<st::metrics::GtRecord> gts;
  if (!a.gt.empty()) gts = st::io::load_gt(a.gt);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw st::IoError("cannot create output directory: " + a.out);

  const int threads = env_threads();
  std::ostringstream summary;
  for (const GridVariant& v : variants) {
    std::string text = base_text + "\n";
    for (const std::string& kv : v.overrides) {
      text += kv.substr(0, kv.find('=')) + " = " + kv.substr(kv.find('=') + 1) + "\n";
    }
    const st::tracker::TrackerConfig cfg = st::config::parse(text);
    const auto stream = st::tracker::process_sequences(sequences, cfg, threads);
    const std::string stem = a.out + "/" + v.name;
    st::io::write_tracks(stream, stem + ".tracks.jsonl");
    st::io::write_text(st::config::serialize(cfg), stem + ".config");

    summary << v.name << ": " << stream.size() << " record(s)";
    if (!gts.empty()) {
      const auto report = st::metrics::evaluate(stream, gts);
      summary << "  " << summary_line(report.all);
    }
    summary << "\n";
    std::cout << "ablate " << v.name << ": " << stream.size() << " record(s)\n";
  }
  st::io::write_text(summary.str(), a.out + "/summary.txt");
  std::cout << "wrote " << variants.size() << " variant(s) to " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D multi-object tracking by detection"};
  app.require_subcommand(1);

  TrackArgs track_args;
  auto* track = app.add_subcommand("track", "Run the tracking pipeline");
  track->add_option("--dets", track_args.dets, "Detections file (JSONL)")->required();
  track->add_option("--config", track_args.config,
                    "Config file path or profile name (wod, nuscenes, desk)")
      ->required();
  track->add_option("--out", track_args.out, "Output tracks file")->required();
  track->callback([&] { run_track(track_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate tracks against ground truth");
  eval->add_option("--tracks", eval_args.tracks, "Tracks file (JSONL)")->required();
  eval->add_option("--gt", eval_args.gt, "Ground-truth file (JSONL)")->required();
  eval->add_flag("--interpolate", eval_args.interpolate,
                 "Fill tracklet gaps and rescore before evaluating");
  eval->add_flag("--amota", eval_args.amota, "Add the AMOTA/AMOTP recall sweep");
  eval->add_option("--report", eval_args.report, "Report output path")->required();
  eval->callback([&] { run_eval(eval_args); });

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "Ground-truth oracle track streams");
  oracle->add_option("--dets", oracle_args.dets, "Detections file (JSONL)")->required();
  oracle->add_option("--gt", oracle_args.gt, "Ground-truth file (JSONL)")->required();
  oracle->add_option("--mode", oracle_args.mode, "gt-output or gt-all")
      ->required()
      ->check(CLI::IsMember({"gt-output", "gt-all"}));
  oracle->add_option("--out", oracle_args.out, "Output tracks file")->required();
  oracle->add_option("--config", oracle_args.config,
                     "Tracker config for gt-output mode (default: wod)");
  oracle->callback([&] { run_oracle(oracle_args); });

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scene");
  simulate->add_option("--scenario", sim_args.scenario, "Scenario file")->required();
  simulate->add_option("--out-dets", sim_args.out_dets, "Detections output path")
      ->required();
  simulate->add_option("--out-gt", sim_args.out_gt, "Ground-truth output path")
      ->required();
  simulate->add_option("--seed", sim_args.seed, "Random seed")->required();
  simulate->callback([&] { run_simulate(sim_args); });

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Run a grid of config variants");
  ablate->add_option("--dets", ablate_args.dets, "Detections file (JSONL)")->required();
  ablate->add_option("--grid", ablate_args.grid,
                     "Variant file: `<name> <key>=<value>...` per line")
      ->required();
  ablate->add_option("--out", ablate_args.out, "Output directory")->required();
  ablate->add_option("--config", ablate_args.config,
                     "Base config path or profile (default: wod)");
  ablate->add_option("--gt", ablate_args.gt,
                     "Optional ground truth; adds metrics to summary.txt");
  ablate->callback([&] { run_ablate(ablate_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  } catch (const st::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
