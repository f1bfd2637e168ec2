#include "simpletrack/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace simpletrack::io {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return std::string(buf);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += "\"";
  return out;
}

std::string box_json(const BBox3D& b) {
  return "[" + fmt(b.cx) + "," + fmt(b.cy) + "," + fmt(b.cz) + "," +
         fmt(b.length) + "," + fmt(b.width) + "," + fmt(b.height) + "," +
         fmt(b.yaw) + "]";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "{\"format_version\":" << kFormatVersion << "}\n";
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---- reading helpers ----

struct LineReader {
  std::ifstream in;
  int line_no = 0;
  explicit LineReader(const std::string& path) : in(path) {
    if (!in) throw IoError("cannot read '" + path + "'");
  }
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }
};

json parse_line(const std::string& line, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw ParseError(e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
  return j;
}

// Consumes the header line; true when the file had one and content follows.
bool read_header(LineReader& reader) {
  std::string line;
  if (!reader.next(line)) return false;  // empty file: zero records
  const json j = parse_line(line, reader.line_no);
  if (!j.contains("format_version")) {
    throw SchemaError("format_version", "missing header line");
  }
  if (!j["format_version"].is_number_integer() ||
      j["format_version"].get<int>() != kFormatVersion) {
    throw SchemaError("format_version",
                      "unsupported version " + j["format_version"].dump());
  }
  return true;
}

void check_fields(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw SchemaError(key, "unknown field");
  }
}

std::string get_string(const json& j, const char* field) {
  if (!j.contains(field)) throw SchemaError(field, "missing");
  if (!j[field].is_string() || j[field].get<std::string>().empty()) {
    throw SchemaError(field, "expected a non-empty string");
  }
  return j[field].get<std::string>();
}

std::int64_t get_int(const json& j, const char* field) {
  if (!j.contains(field)) throw SchemaError(field, "missing");
  if (!j[field].is_number_integer() && !j[field].is_number_unsigned()) {
    throw SchemaError(field, "expected an integer");
  }
  return j[field].get<std::int64_t>();
}

double get_double(const json& j, const char* field) {
  if (!j.contains(field)) throw SchemaError(field, "missing");
  if (!j[field].is_number()) throw SchemaError(field, "expected a number");
  const double v = j[field].get<double>();
  if (!std::isfinite(v)) throw SchemaError(field, "must be finite");
  return v;
}

BBox3D get_box(const json& j) {
  if (!j.contains("box")) throw SchemaError("box", "missing");
  const json& b = j["box"];
  if (!b.is_array() || b.size() != 7) {
    throw SchemaError("box", "expected [cx, cy, cz, length, width, height, "
                             "yaw]");
  }
  static const char* kNames[7] = {"cx",    "cy",    "cz",    "length",
                                  "width", "height", "yaw"};
  double v[7];
  for (size_t i = 0; i < 7; ++i) {
    if (!b[i].is_number()) throw SchemaError(kNames[i], "expected a number");
    v[i] = b[i].get<double>();
    if (!std::isfinite(v[i])) throw SchemaError(kNames[i], "must be finite");
  }
  for (size_t i = 3; i < 6; ++i) {
    if (v[i] <= 0.0) throw SchemaError(kNames[i], "must be positive");
  }
  return make_box(v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
}

double get_score(const json& j) {
  const double s = get_double(j, "score");
  if (s < 0.0 || s > 1.0) throw SchemaError("score", "must lie in [0, 1]");
  return s;
}

}  // namespace

std::vector<Frame> load_detections(const std::string& path) {
  LineReader reader(path);
  if (!read_header(reader)) return {};

  static const std::set<std::string> kAllowed = {
      "sequence_id", "frame_index", "timestamp",          "class",
      "score",       "box",         "is_evaluation_frame", "velocity"};

  std::map<std::pair<std::string, std::int64_t>, Frame> frames;
  std::string line;
  while (reader.next(line)) {
    const json j = parse_line(line, reader.line_no);
    check_fields(j, kAllowed);

    const std::string seq = get_string(j, "sequence_id");
    const std::int64_t frame_index = get_int(j, "frame_index");
    const double timestamp = get_double(j, "timestamp");
    const bool is_eval = j.contains("is_evaluation_frame")
                             ? (j["is_evaluation_frame"].is_boolean()
                                    ? j["is_evaluation_frame"].get<bool>()
                                    : throw SchemaError("is_evaluation_frame",
                                                        "expected a boolean"))
                             : true;

    auto [it, fresh] = frames.try_emplace({seq, frame_index});
    Frame& frame = it->second;
    if (fresh) {
      frame.sequence_id = seq;
      frame.frame_index = frame_index;
      frame.timestamp = timestamp;
      frame.is_evaluation_frame = is_eval;
    }

    const bool has_det =
        j.contains("class") || j.contains("score") || j.contains("box");
    if (!has_det) {
      if (j.contains("velocity")) {
        throw SchemaError("velocity", "velocity without a detection");
      }
      continue;  // frame marker
    }

    Detection det;
    det.class_label = get_string(j, "class");
    det.score = get_score(j);
    det.box = get_box(j);
    if (j.contains("velocity")) {
      const json& v = j["velocity"];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
          !v[1].is_number()) {
        throw SchemaError("velocity", "expected [vx, vy]");
      }
      const double vx = v[0].get<double>(), vy = v[1].get<double>();
      if (!std::isfinite(vx) || !std::isfinite(vy)) {
        throw SchemaError("velocity", "must be finite");
      }
      det.velocity = Vec2{vx, vy};
    }
    frame.detections.push_back(std::move(det));
  }

  std::vector<Frame> out;
  out.reserve(frames.size());
  for (auto& [key, frame] : frames) out.push_back(std::move(frame));
  return out;
}

void write_detections(const std::vector<Frame>& frames,
                      const std::string& path) {
  auto out = open_out(path);
  for (const Frame& frame : frames) {
    const std::string prefix =
        "{\"sequence_id\":" + quote(frame.sequence_id) +
        ",\"frame_index\":" + std::to_string(frame.frame_index) +
        ",\"timestamp\":" + fmt(frame.timestamp);
    const std::string eval_suffix =
        std::string(",\"is_evaluation_frame\":") +
        (frame.is_evaluation_frame ? "true" : "false") + "}";
    if (frame.detections.empty()) {
      out << prefix << eval_suffix << "\n";
      continue;
    }
    for (const Detection& det : frame.detections) {
      out << prefix << ",\"class\":" << quote(det.class_label)
          << ",\"score\":" << fmt(det.score) << ",\"box\":"
          << box_json(det.box);
      if (det.velocity) {
        out << ",\"velocity\":[" << fmt(det.velocity->x) << ","
            << fmt(det.velocity->y) << "]";
      }
      out << eval_suffix << "\n";
    }
  }
  finish_out(out, path);
}

tracker::TrackStream load_tracks(const std::string& path) {
  LineReader reader(path);
  if (!read_header(reader)) return {};

  static const std::set<std::string> kAllowed = {
      "sequence_id", "frame_index", "track_id", "class", "score", "box",
      "source"};

  tracker::TrackStream out;
  std::set<std::tuple<std::string, std::int64_t, int>> seen;
  std::string line;
  while (reader.next(line)) {
    const json j = parse_line(line, reader.line_no);
    check_fields(j, kAllowed);

    tracker::TrackRecord r;
    r.sequence_id = get_string(j, "sequence_id");
    r.frame_index = get_int(j, "frame_index");
    r.track_id = static_cast<int>(get_int(j, "track_id"));
    r.class_label = get_string(j, "class");
    r.score = get_score(j);
    r.box = get_box(j);
    const std::string source = get_string(j, "source");
    if (source == "det") {
      r.source = lifecycle::FrameSource::Detection;
    } else if (source == "pred") {
      r.source = lifecycle::FrameSource::MotionPrediction;
    } else {
      throw SchemaError("source", "expected \"det\" or \"pred\"");
    }
    if (!seen.insert({r.sequence_id, r.frame_index, r.track_id}).second) {
      throw SchemaError("track_id",
                        "duplicate (sequence, frame, track) on line " +
                            std::to_string(reader.line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_tracks(const tracker::TrackStream& stream,
                  const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : stream) {
    out << "{\"sequence_id\":" << quote(r.sequence_id)
        << ",\"frame_index\":" << r.frame_index
        << ",\"track_id\":" << r.track_id
        << ",\"class\":" << quote(r.class_label)
        << ",\"score\":" << fmt(r.score) << ",\"box\":" << box_json(r.box)
        << ",\"source\":"
        << (r.source == lifecycle::FrameSource::Detection ? "\"det\""
                                                          : "\"pred\"")
        << "}\n";
  }
  finish_out(out, path);
}

std::vector<metrics::GtRecord> load_gt(const std::string& path) {
  LineReader reader(path);
  if (!read_header(reader)) return {};

  static const std::set<std::string> kAllowed = {
      "sequence_id", "frame_index", "gt_id", "class", "box"};

  std::vector<metrics::GtRecord> out;
  std::set<std::tuple<std::string, std::int64_t, int>> seen;
  std::string line;
  while (reader.next(line)) {
    const json j = parse_line(line, reader.line_no);
    check_fields(j, kAllowed);

    metrics::GtRecord r;
    r.sequence_id = get_string(j, "sequence_id");
    r.frame_index = get_int(j, "frame_index");
    r.gt_id = static_cast<int>(get_int(j, "gt_id"));
    r.class_label = get_string(j, "class");
    r.box = get_box(j);
    if (!seen.insert({r.sequence_id, r.frame_index, r.gt_id}).second) {
      throw SchemaError("gt_id", "duplicate (sequence, frame, gt) on line " +
                                     std::to_string(reader.line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_gt(const std::vector<metrics::GtRecord>& records,
              const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : records) {
    out << "{\"sequence_id\":" << quote(r.sequence_id)
        << ",\"frame_index\":" << r.frame_index << ",\"gt_id\":" << r.gt_id
        << ",\"class\":" << quote(r.class_label)
        << ",\"box\":" << box_json(r.box) << "}\n";
  }
  finish_out(out, path);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace simpletrack::io
