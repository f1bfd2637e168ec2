#include "simpletrack/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace simpletrack::sim {

// ---------------------------------------------------------------------------
// RNG transforms. All draws go through uniform(), which uses the top 53 bits
// of the engine output, so streams are identical everywhere.

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  const int span = hi - lo + 1;
  int v = lo + static_cast<int>(uniform() * span);
  return std::min(v, hi);
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller, cosine branch only. No spare cached: one draw pair per call
  // keeps consumption independent of call history.
  const double u1 = std::max(uniform(), 1e-300);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

int Rng::poisson(double rate) {
  if (rate <= 0.0) return 0;
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

bool Rng::chance(double p) { return uniform() < p; }

// ---------------------------------------------------------------------------
// Scenario parsing: same flat key=value syntax as tracker configs.

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("scenario: bad number for '" + key + "': " + value);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("scenario: bad integer for '" + key + "': " + value);
  }
  return out;
}

std::vector<std::string> parse_class_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("scenario: 'classes' must name at least one class");
  return out;
}

void apply_key(Scenario& s, const std::string& key, const std::string& value) {
  if (key == "sequences") s.sequences = parse_int(key, value);
  else if (key == "frames") s.frames = parse_int(key, value);
  else if (key == "objects") s.objects = parse_int(key, value);
  else if (key == "classes") s.classes = parse_class_list(value);
  else if (key == "area") s.area = parse_double(key, value);
  else if (key == "speed_min") s.speed_min = parse_double(key, value);
  else if (key == "speed_max") s.speed_max = parse_double(key, value);
  else if (key == "yaw_jitter") s.yaw_jitter = parse_double(key, value);
  else if (key == "spacing_min") s.spacing_min = parse_double(key, value);
  else if (key == "spacing_max") s.spacing_max = parse_double(key, value);
  else if (key == "score_mean") s.score_mean = parse_double(key, value);
  else if (key == "score_stddev") s.score_stddev = parse_double(key, value);
  else if (key == "pos_noise") s.pos_noise = parse_double(key, value);
  else if (key == "yaw_noise") s.yaw_noise = parse_double(key, value);
  else if (key == "dim_noise") s.dim_noise = parse_double(key, value);
  else if (key == "dropout") s.dropout = parse_double(key, value);
  else if (key == "score_dip_fraction") s.score_dip_fraction = parse_double(key, value);
  else if (key == "score_dip_min_frames") s.score_dip_min_frames = parse_int(key, value);
  else if (key == "score_dip_max_frames") s.score_dip_max_frames = parse_int(key, value);
  else if (key == "score_dip_low") s.score_dip_low = parse_double(key, value);
  else if (key == "score_dip_high") s.score_dip_high = parse_double(key, value);
  else if (key == "score_dip_rate") s.score_dip_rate = parse_double(key, value);
  else if (key == "clutter_rate") s.clutter_rate = parse_double(key, value);
  else if (key == "clutter_score_min") s.clutter_score_min = parse_double(key, value);
  else if (key == "clutter_score_max") s.clutter_score_max = parse_double(key, value);
  else if (key == "duplicate_min") s.duplicate_min = parse_int(key, value);
  else if (key == "duplicate_max") s.duplicate_max = parse_int(key, value);
  else if (key == "duplicate_score_min") s.duplicate_score_min = parse_double(key, value);
  else if (key == "duplicate_score_max") s.duplicate_score_max = parse_double(key, value);
  else if (key == "evaluation_frame_period") s.evaluation_frame_period = parse_int(key, value);
  else if (key == "frame_interval") s.frame_interval = parse_double(key, value);
  else throw ConfigError("scenario: unknown key '" + key + "'");
}

void validate(const Scenario& s) {
  auto fail = [](const std::string& msg) { throw ConfigError("scenario: " + msg); };
  if (s.sequences < 1) fail("'sequences' must be >= 1");
  if (s.frames < 1) fail("'frames' must be >= 1");
  if (s.objects < 0) fail("'objects' must be >= 0");
  if (s.area <= 0.0) fail("'area' must be > 0");
  if (s.speed_min < 0.0 || s.speed_max < s.speed_min) fail("need 0 <= speed_min <= speed_max");
  if (s.spacing_min < 0.0 || s.spacing_max < s.spacing_min) {
    fail("need 0 <= spacing_min <= spacing_max");
  }
  if (s.dropout < 0.0 || s.dropout > 1.0) fail("'dropout' must be in [0, 1]");
  if (s.score_dip_fraction < 0.0 || s.score_dip_fraction > 1.0) {
    fail("'score_dip_fraction' must be in [0, 1]");
  }
  if (s.score_dip_min_frames < 1 || s.score_dip_max_frames < s.score_dip_min_frames) {
    fail("need 1 <= score_dip_min_frames <= score_dip_max_frames");
  }
  if (s.clutter_rate < 0.0) fail("'clutter_rate' must be >= 0");
  if (s.duplicate_min < 0 || s.duplicate_max < s.duplicate_min) {
    fail("need 0 <= duplicate_min <= duplicate_max");
  }
  if (s.evaluation_frame_period < 1) fail("'evaluation_frame_period' must be >= 1");
  if (s.frame_interval <= 0.0) fail("'frame_interval' must be > 0");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("scenario: line " + std::to_string(lineno) + ": expected key=value");
    }
    apply_key(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// ---------------------------------------------------------------------------
// Generation.

namespace {

struct NominalDims {
  double length, width, height;
};

NominalDims nominal_dims(const std::string& cls) {
  if (cls == "vehicle") return {4.5, 2.0, 1.7};
  if (cls == "pedestrian") return {0.8, 0.8, 1.8};
  if (cls == "cyclist") return {1.8, 0.8, 1.7};
  return {3.0, 1.8, 1.6};
}

struct SimObject {
  int gt_id = 0;
  std::string cls;
  double x = 0, y = 0, yaw = 0;
  double length = 0, width = 0, height = 0;
  double vx = 0, vy = 0;
  bool dip_capable = false;
  int dip_left = 0;
};

BBox3D object_box(const SimObject& o) {
  return make_box(o.x, o.y, o.height * 0.5, o.length, o.width, o.height, o.yaw);
}

std::vector<SimObject> spawn_objects(const Scenario& sc, int seq_index, Rng& rng) {
  std::vector<SimObject> objects(static_cast<size_t>(sc.objects));
  const bool convoy = sc.spacing_max > 0.0;
  const double heading = rng.uniform(-M_PI, M_PI);  // shared in convoy mode
  const int grid = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(sc.objects)))));

  // Convoy rows/columns accumulate box extents plus random gaps so neighbor
  // clearance stays inside [spacing_min, spacing_max].
  double row_y = 0.0;
  double col_x = 0.0;
  double row_depth = 0.0;

  for (int i = 0; i < sc.objects; ++i) {
    SimObject& o = objects[static_cast<size_t>(i)];
    o.gt_id = seq_index * 100000 + i + 1;
    o.cls = sc.classes[static_cast<size_t>(i) % sc.classes.size()];
    const NominalDims dims = nominal_dims(o.cls);
    o.length = dims.length;
    o.width = dims.width;
    o.height = dims.height;

    if (convoy) {
      if (i > 0 && i % grid == 0) {
        row_y += row_depth + rng.uniform(sc.spacing_min, sc.spacing_max);
        col_x = 0.0;
        row_depth = 0.0;
      } else if (i > 0) {
        col_x += rng.uniform(sc.spacing_min, sc.spacing_max);
      }
      o.x = col_x + o.length * 0.5;
      o.y = row_y + o.width * 0.5;
      col_x += o.length;
      row_depth = std::max(row_depth, o.width);
      o.yaw = normalize_yaw(heading + rng.uniform(-sc.yaw_jitter, sc.yaw_jitter));
      const double speed = rng.uniform(sc.speed_min, sc.speed_max);
      o.vx = speed * std::cos(heading);
      o.vy = speed * std::sin(heading);
    } else {
      o.x = rng.uniform(-sc.area, sc.area);
      o.y = rng.uniform(-sc.area, sc.area);
      o.yaw = rng.uniform(-M_PI, M_PI);
      const double course = normalize_yaw(o.yaw + rng.uniform(-sc.yaw_jitter, sc.yaw_jitter));
      const double speed = rng.uniform(sc.speed_min, sc.speed_max);
      o.vx = speed * std::cos(course);
      o.vy = speed * std::sin(course);
    }
    o.dip_capable = rng.chance(sc.score_dip_fraction);
  }
  return objects;
}

std::string sequence_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sim-%03d", index);
  return buf;
}

double clamp_score(double s) { return std::min(1.0, std::max(0.05, s)); }

}  // namespace

SimResult generate(const Scenario& scenario, std::uint64_t seed) {
  validate(scenario);
  SimResult result;
  result.sequences.reserve(static_cast<size_t>(scenario.sequences));

  for (int seq = 0; seq < scenario.sequences; ++seq) {
    Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(seq));
    const std::string seq_id = sequence_name(seq);
    std::vector<SimObject> objects = spawn_objects(scenario, seq, rng);
    std::vector<Frame> frames;
    frames.reserve(static_cast<size_t>(scenario.frames));

    for (int f = 0; f < scenario.frames; ++f) {
      Frame frame;
      frame.sequence_id = seq_id;
      frame.frame_index = f;
      frame.timestamp = f * scenario.frame_interval;
      frame.is_evaluation_frame = (f % scenario.evaluation_frame_period) == 0;

      for (SimObject& o : objects) {
        if (f > 0) {
          o.x += o.vx;
          o.y += o.vy;
        }
        if (frame.is_evaluation_frame) {
          result.gt.push_back({seq_id, f, o.gt_id, o.cls, object_box(o)});
        }

        // Score first (dip state advances even when the detection drops out).
        double score;
        if (o.dip_left > 0) {
          score = rng.uniform(scenario.score_dip_low, scenario.score_dip_high);
          --o.dip_left;
        } else if (o.dip_capable && rng.chance(scenario.score_dip_rate)) {
          o.dip_left = rng.uniform_int(scenario.score_dip_min_frames,
                                       scenario.score_dip_max_frames);
          score = rng.uniform(scenario.score_dip_low, scenario.score_dip_high);
          --o.dip_left;
        } else {
          score = clamp_score(rng.normal(scenario.score_mean, scenario.score_stddev));
        }
        if (rng.chance(scenario.dropout)) continue;

        Detection det;
        det.class_label = o.cls;
        det.score = score;
        det.box = make_box(o.x + rng.normal(0.0, scenario.pos_noise),
                           o.y + rng.normal(0.0, scenario.pos_noise),
                           o.height * 0.5 + rng.normal(0.0, scenario.pos_noise),
                           std::max(0.1, o.length + rng.normal(0.0, scenario.dim_noise)),
                           std::max(0.1, o.width + rng.normal(0.0, scenario.dim_noise)),
                           std::max(0.1, o.height + rng.normal(0.0, scenario.dim_noise)),
                           o.yaw + rng.normal(0.0, scenario.yaw_noise));
        det.velocity = Vec2{o.vx, o.vy};
        frame.detections.push_back(det);

        // Near-duplicates hug the parent box: per-axis shifts of 5-15% of the
        // extent keep overlap well above any reasonable NMS threshold.
        const int dups = rng.uniform_int(scenario.duplicate_min, scenario.duplicate_max);
        for (int d = 0; d < dups; ++d) {
          Detection dup = det;
          const double sx = rng.chance(0.5) ? 1.0 : -1.0;
          const double sy = rng.chance(0.5) ? 1.0 : -1.0;
          dup.box.cx += sx * dup.box.length * rng.uniform(0.05, 0.15);
          dup.box.cy += sy * dup.box.width * rng.uniform(0.05, 0.15);
          dup.score = det.score * rng.uniform(scenario.duplicate_score_min,
                                              scenario.duplicate_score_max);
          dup.velocity.reset();
          frame.detections.push_back(dup);
        }
      }

      const int clutter = rng.poisson(scenario.clutter_rate);
      for (int c = 0; c < clutter; ++c) {
        const std::string& cls =
            scenario.classes[static_cast<size_t>(rng.uniform_int(
                0, static_cast<int>(scenario.classes.size()) - 1))];
        const NominalDims dims = nominal_dims(cls);
        const double scale = rng.uniform(0.8, 1.2);
        Detection det;
        det.class_label = cls;
        det.score = rng.uniform(scenario.clutter_score_min, scenario.clutter_score_max);
        det.box = make_box(rng.uniform(-scenario.area, scenario.area),
                           rng.uniform(-scenario.area, scenario.area),
                           dims.height * scale * 0.5, dims.length * scale,
                           dims.width * scale, dims.height * scale,
                           rng.uniform(-M_PI, M_PI));
        frame.detections.push_back(det);
      }

      frames.push_back(std::move(frame));
    }
    result.sequences.push_back(std::move(frames));
  }
  return result;
}

}  // namespace simpletrack::sim
