#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simpletrack/metrics.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::sim {

/// Synthetic scene description. Parsed from flat key=value text with the
/// same syntax as tracker configs; every field is a key of the same name
/// (e.g. `frames = 100`, `score_dip_fraction = 0.3`).
struct Scenario {
  int sequences = 1;
  int frames = 100;
  int objects = 10;
  std::vector<std::string> classes = {"vehicle"};  // comma list, round-robin

  double area = 60.0;          // half-extent of the spawn square, meters
  double speed_min = 0.2;      // meters per frame
  double speed_max = 1.0;
  double yaw_jitter = 0.2;     // heading spread around the lane direction

  // Convoy placement for crowded scenes: when spacing_max > 0, objects are
  // laid out on a grid with neighbor gaps drawn from [spacing_min,
  // spacing_max] and share one heading.
  double spacing_min = 0.0;
  double spacing_max = 0.0;

  double score_mean = 0.85;    // detection score distribution
  double score_stddev = 0.05;
  double pos_noise = 0.05;     // center noise sigma, meters
  double yaw_noise = 0.01;     // radians
  double dim_noise = 0.02;     // meters
  double dropout = 0.0;        // per-frame probability a detection is missing

  // Score dips: a fraction of objects periodically report low scores for a
  // short run of frames (occlusion-like).
  double score_dip_fraction = 0.0;
  int score_dip_min_frames = 1;
  int score_dip_max_frames = 3;
  double score_dip_low = 0.15;
  double score_dip_high = 0.45;
  double score_dip_rate = 0.05;  // per-frame chance a dip starts

  double clutter_rate = 0.0;    // expected clutter boxes per frame
  double clutter_score_min = 0.5;
  double clutter_score_max = 0.9;

  // Duplicate boxes around every emitted detection (NMS stress).
  int duplicate_min = 0;
  int duplicate_max = 0;
  double duplicate_score_min = 0.6;  // fraction of the parent score
  double duplicate_score_max = 0.95;

  int evaluation_frame_period = 1;  // every k-th frame is an evaluation frame
  double frame_interval = 0.1;      // seconds between frames
};

/// Parse key=value text. Throws ConfigError on unknown keys or bad values.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

struct SimResult {
  std::vector<std::vector<Frame>> sequences;
  std::vector<metrics::GtRecord> gt;  // evaluation frames only
};

/// Deterministic generation: the same (scenario, seed) always produces the
/// same streams, independent of platform.
SimResult generate(const Scenario& scenario, std::uint64_t seed);

/// Deterministic RNG: mt19937_64 raw output (fully specified by the
/// standard) with fixed transforms, so streams do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal(double mean, double stddev);
  int poisson(double rate);
  bool chance(double p);

 private:
  std::mt19937_64 gen_;
};

}  // namespace simpletrack::sim
