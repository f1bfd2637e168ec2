#include "simpletrack/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace simpletrack::config {

namespace {

// Canonical key order; doubles as the known-key set and the application
// order ("metric" precedes "gate" so an explicit gate always wins).
const std::vector<std::string>& key_order() {
  static const std::vector<std::string> keys = {
      "nms_iou",
      "metric",
      "gate",
      "strategy",
      "motion",
      "t_high",
      "t_low",
      "min_hits",
      "max_miss",
      "output_score",
      "output_predictions",
      "prediction_score_factor",
      "stage2_counts_hit",
      "compound_prediction_scores",
      "world_frame",
      "kalman.initial_variance",
      "kalman.initial_velocity_variance",
      "kalman.process_noise",
      "kalman.velocity_process_noise",
      "kalman.observation_noise",
      "kalman.yaw_flip_fix",
  };
  return keys;
}

bool known_key(const std::string& key) {
  const auto& keys = key_order();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::exception();
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value +
                      "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < INT32_MIN || v > INT32_MAX) {
      throw std::exception();
    }
    return static_cast<int>(v);
  } catch (...) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value +
                      "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + value +
                    "'");
}

association::MetricKind parse_metric(const std::string& value) {
  if (value == "iou3d") return association::MetricKind::IoU3D;
  if (value == "giou3d") return association::MetricKind::GIoU3D;
  if (value == "l2") return association::MetricKind::L2Bev;
  if (value == "mahalanobis") return association::MetricKind::Mahalanobis;
  throw ConfigError(
      "key 'metric': expected iou3d|giou3d|l2|mahalanobis, got '" + value +
      "'");
}

association::MatchStrategy parse_strategy(const std::string& value) {
  if (value == "hungarian") return association::MatchStrategy::Hungarian;
  if (value == "greedy") return association::MatchStrategy::Greedy;
  throw ConfigError("key 'strategy': expected hungarian|greedy, got '" +
                    value + "'");
}

motion::MotionModelKind parse_motion(const std::string& value) {
  if (value == "kalman") return motion::MotionModelKind::KalmanFilter;
  if (value == "cv") return motion::MotionModelKind::ConstantVelocity;
  if (value == "kalman_pd") return motion::MotionModelKind::KalmanPredictOnly;
  throw ConfigError("key 'motion': expected kalman|cv|kalman_pd, got '" +
                    value + "'");
}

void apply_key(tracker::TrackerParams& p, bool* world_frame,
               const std::string& key, const std::string& value) {
  auto& lc = p.lifecycle;
  auto& kp = p.kalman;
  if (key == "nms_iou") {
    p.nms_iou = parse_double(key, value);
  } else if (key == "metric") {
    p.metric.kind = parse_metric(value);
    p.metric.gate = association::default_gate(p.metric.kind);
  } else if (key == "gate") {
    p.metric.gate = parse_double(key, value);
  } else if (key == "strategy") {
    p.strategy = parse_strategy(value);
  } else if (key == "motion") {
    p.motion = parse_motion(value);
  } else if (key == "t_high") {
    lc.t_high = parse_double(key, value);
  } else if (key == "t_low") {
    lc.t_low = parse_double(key, value);
  } else if (key == "min_hits") {
    lc.min_hits = parse_int(key, value);
  } else if (key == "max_miss") {
    lc.max_miss = parse_int(key, value);
  } else if (key == "output_score") {
    lc.output_score = parse_double(key, value);
  } else if (key == "output_predictions") {
    lc.output_predictions = parse_bool(key, value);
  } else if (key == "prediction_score_factor") {
    lc.prediction_score_factor = parse_double(key, value);
  } else if (key == "stage2_counts_hit") {
    lc.stage2_counts_hit = parse_bool(key, value);
  } else if (key == "compound_prediction_scores") {
    lc.compound_prediction_scores = parse_bool(key, value);
  } else if (key == "world_frame") {
    if (!world_frame) {
      throw ConfigError("key 'world_frame' cannot be set per class");
    }
    *world_frame = parse_bool(key, value);
  } else if (key == "kalman.initial_variance") {
    kp.initial_variance = parse_double(key, value);
  } else if (key == "kalman.initial_velocity_variance") {
    kp.initial_velocity_variance = parse_double(key, value);
  } else if (key == "kalman.process_noise") {
    kp.process_noise = parse_double(key, value);
  } else if (key == "kalman.velocity_process_noise") {
    kp.velocity_process_noise = parse_double(key, value);
  } else if (key == "kalman.observation_noise") {
    kp.observation_noise = parse_double(key, value);
  } else if (key == "kalman.yaw_flip_fix") {
    kp.yaw_flip_fix = parse_bool(key, value);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string metric_name(association::MetricKind kind) {
  switch (kind) {
    case association::MetricKind::IoU3D: return "iou3d";
    case association::MetricKind::GIoU3D: return "giou3d";
    case association::MetricKind::L2Bev: return "l2";
    case association::MetricKind::Mahalanobis: return "mahalanobis";
  }
  return "giou3d";
}

std::string motion_name(motion::MotionModelKind kind) {
  switch (kind) {
    case motion::MotionModelKind::KalmanFilter: return "kalman";
    case motion::MotionModelKind::ConstantVelocity: return "cv";
    case motion::MotionModelKind::KalmanPredictOnly: return "kalman_pd";
  }
  return "kalman";
}

std::string get_key(const tracker::TrackerParams& p, bool world_frame,
                    const std::string& key) {
  const auto& lc = p.lifecycle;
  const auto& kp = p.kalman;
  if (key == "nms_iou") return format_double(p.nms_iou);
  if (key == "metric") return metric_name(p.metric.kind);
  if (key == "gate") return format_double(p.metric.gate);
  if (key == "strategy") {
    return p.strategy == association::MatchStrategy::Hungarian ? "hungarian"
                                                               : "greedy";
  }
  if (key == "motion") return motion_name(p.motion);
  if (key == "t_high") return format_double(lc.t_high);
  if (key == "t_low") return format_double(lc.t_low);
  if (key == "min_hits") return std::to_string(lc.min_hits);
  if (key == "max_miss") return std::to_string(lc.max_miss);
  if (key == "output_score") return format_double(lc.output_score);
  if (key == "output_predictions") {
    return lc.output_predictions ? "true" : "false";
  }
  if (key == "prediction_score_factor") {
    return format_double(lc.prediction_score_factor);
  }
  if (key == "stage2_counts_hit") {
    return lc.stage2_counts_hit ? "true" : "false";
  }
  if (key == "compound_prediction_scores") {
    return lc.compound_prediction_scores ? "true" : "false";
  }
  if (key == "world_frame") return world_frame ? "true" : "false";
  if (key == "kalman.initial_variance") {
    return format_double(kp.initial_variance);
  }
  if (key == "kalman.initial_velocity_variance") {
    return format_double(kp.initial_velocity_variance);
  }
  if (key == "kalman.process_noise") return format_double(kp.process_noise);
  if (key == "kalman.velocity_process_noise") {
    return format_double(kp.velocity_process_noise);
  }
  if (key == "kalman.observation_noise") {
    return format_double(kp.observation_noise);
  }
  if (key == "kalman.yaw_flip_fix") return kp.yaw_flip_fix ? "true" : "false";
  return "";
}

struct RawConfig {
  std::map<std::string, std::string> global;
  std::map<std::string, std::map<std::string, std::string>> per_class;
};

// Profiles stay minimal: keys matching a metric's default gate are omitted so
// overriding the metric later picks up that metric's own default gate.
RawConfig profile_raw(const std::string& name) {
  RawConfig raw;
  if (name == "wod") {
    raw.global = {
        {"nms_iou", "0.25"},          {"metric", "giou3d"},
        {"strategy", "hungarian"},    {"motion", "kalman"},
        {"t_high", "0.7"},            {"t_low", "0.1"},
        {"min_hits", "3"},            {"max_miss", "2"},
        {"output_score", "0.7"},      {"output_predictions", "false"},
        {"prediction_score_factor", "0.01"},
    };
    raw.per_class["pedestrian"] = {{"t_high", "0.5"}, {"output_score", "0.5"}};
  } else if (name == "nuscenes") {
    raw.global = {
        {"nms_iou", "0.1"},           {"metric", "giou3d"},
        {"strategy", "hungarian"},    {"motion", "kalman"},
        {"t_high", "0.5"},            {"t_low", "0.1"},
        {"min_hits", "1"},            {"max_miss", "2"},
        {"output_score", "0"},        {"output_predictions", "true"},
        {"prediction_score_factor", "0.01"},
    };
  } else if (name == "desk") {
    raw.global = {
        {"nms_iou", "0.25"},          {"metric", "giou3d"},
        {"strategy", "hungarian"},    {"motion", "kalman"},
        {"t_high", "0.5"},            {"t_low", "0.1"},
        {"min_hits", "3"},            {"max_miss", "2"},
        {"output_score", "0.5"},      {"output_predictions", "false"},
        {"prediction_score_factor", "0.01"},
    };
  } else {
    throw ConfigError("unknown profile '" + name + "'");
  }
  return raw;
}

void apply_raw_ordered(const std::map<std::string, std::string>& entries,
                       tracker::TrackerParams& params, bool* world_frame) {
  for (const std::string& key : key_order()) {
    const auto it = entries.find(key);
    if (it != entries.end()) apply_key(params, world_frame, key, it->second);
  }
}

tracker::TrackerConfig build(const RawConfig& raw) {
  tracker::TrackerConfig cfg;
  apply_raw_ordered(raw.global, cfg.defaults, &cfg.world_frame);
  for (const auto& [cls, entries] : raw.per_class) {
    tracker::TrackerParams params = cfg.defaults;
    apply_raw_ordered(entries, params, nullptr);
    cfg.per_class[cls] = params;
  }
  cfg.validate();
  return cfg;
}

RawConfig parse_raw(const std::string& text, std::string* profile_name) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    if (key == "profile") {
      *profile_name = value;
      continue;
    }
    if (known_key(key)) {
      raw.global[key] = value;
      continue;
    }
    // Per-class override: <known key>.<class>.
    bool matched = false;
    for (const std::string& base : key_order()) {
      if (key.size() > base.size() + 1 &&
          key.compare(0, base.size(), base) == 0 && key[base.size()] == '.') {
        raw.per_class[key.substr(base.size() + 1)][base] = value;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
  }
  return raw;
}

}  // namespace

tracker::TrackerConfig parse(const std::string& text) {
  std::string profile_name;
  const RawConfig file_raw = parse_raw(text, &profile_name);
  RawConfig raw;
  if (!profile_name.empty()) raw = profile_raw(profile_name);
  for (const auto& [key, value] : file_raw.global) raw.global[key] = value;
  for (const auto& [cls, entries] : file_raw.per_class) {
    for (const auto& [key, value] : entries) raw.per_class[cls][key] = value;
  }
  return build(raw);
}

tracker::TrackerConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

tracker::TrackerConfig profile(const std::string& name) {
  return build(profile_raw(name));
}

bool is_profile(const std::string& name) {
  return name == "wod" || name == "nuscenes" || name == "desk";
}

std::vector<std::string> profile_names() { return {"wod", "nuscenes", "desk"}; }

std::string serialize(const tracker::TrackerConfig& config) {
  std::ostringstream out;
  out << "# tracker configuration\n";
  for (const std::string& key : key_order()) {
    out << key << " = " << get_key(config.defaults, config.world_frame, key)
        << "\n";
  }
  for (const auto& [cls, params] : config.per_class) {
    for (const std::string& key : key_order()) {
      if (key == "world_frame") continue;
      const std::string value = get_key(params, config.world_frame, key);
      if (value != get_key(config.defaults, config.world_frame, key)) {
        out << key << "." << cls << " = " << value << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace simpletrack::config
