#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace simpletrack {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Wrap an angle into (-pi, pi].
inline double normalize_yaw(double yaw) {
  const double two_pi = 2.0 * M_PI;
  double a = std::fmod(yaw, two_pi);
  if (a <= -M_PI) a += two_pi;
  if (a > M_PI) a -= two_pi;
  return a;
}

/// Signed difference a - b wrapped into (-pi, pi].
inline double yaw_diff(double a, double b) { return normalize_yaw(a - b); }

/// Gravity-aligned oriented 3D box: center, extents, rotation about the
/// vertical axis. Extents must be positive, yaw normalized to (-pi, pi].
struct BBox3D {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double yaw = 0.0;

  double volume() const { return length * width * height; }
  double bottom() const { return cz - 0.5 * height; }
  double top() const { return cz + 0.5 * height; }

  bool valid() const {
    const double vals[7] = {cx, cy, cz, length, width, height, yaw};
    for (double v : vals) {
      if (!std::isfinite(v)) return false;
    }
    return length > 0.0 && width > 0.0 && height > 0.0;
  }
};

/// Construct a box with the yaw normalized at creation.
inline BBox3D make_box(double cx, double cy, double cz, double length,
                       double width, double height, double yaw) {
  return BBox3D{cx, cy, cz, length, width, height, normalize_yaw(yaw)};
}

/// A scored, classed box on a timestamped frame.
struct Detection {
  BBox3D box;
  double score = 0.0;
  std::string class_label;
  std::optional<Vec2> velocity;  // m per frame interval, detector-supplied
};

/// Rigid world-from-ego transform, row-major 4x4.
struct EgoPose {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double heading() const { return std::atan2(m[4], m[0]); }

  BBox3D apply(const BBox3D& b) const {
    BBox3D out = b;
    out.cx = m[0] * b.cx + m[1] * b.cy + m[2] * b.cz + m[3];
    out.cy = m[4] * b.cx + m[5] * b.cy + m[6] * b.cz + m[7];
    out.cz = m[8] * b.cx + m[9] * b.cy + m[10] * b.cz + m[11];
    out.yaw = normalize_yaw(b.yaw + heading());
    return out;
  }

  Vec2 rotate(const Vec2& v) const {
    return Vec2{m[0] * v.x + m[1] * v.y, m[4] * v.x + m[5] * v.y};
  }
};

/// One timestamped slice of a detection stream.
struct Frame {
  std::string sequence_id;
  int64_t frame_index = 0;
  double timestamp = 0.0;
  bool is_evaluation_frame = true;
  std::vector<Detection> detections;
  std::optional<EgoPose> ego_pose;
};

struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedDetection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfOrderFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  int line = 0;
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

struct SchemaError : std::runtime_error {
  std::string field;
  explicit SchemaError(const std::string& field_name, const std::string& msg)
      : std::runtime_error("field '" + field_name + "': " + msg),
        field(field_name) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyGroundTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace simpletrack
