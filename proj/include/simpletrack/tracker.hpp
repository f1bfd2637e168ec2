#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simpletrack/association.hpp"
#include "simpletrack/lifecycle.hpp"
#include "simpletrack/motion.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::tracker {

/// Fully-resolved knobs for one class.
struct TrackerParams {
  double nms_iou = 0.25;
  association::AssociationMetric metric{};  // GIoU, gate -0.5
  association::MatchStrategy strategy = association::MatchStrategy::Hungarian;
  motion::MotionModelKind motion = motion::MotionModelKind::KalmanFilter;
  motion::KalmanParams kalman{};
  lifecycle::LifecycleConfig lifecycle{};
};

struct TrackerConfig {
  TrackerParams defaults{};
  std::map<std::string, TrackerParams> per_class;  // resolved overrides
  bool world_frame = true;  // transform with the ego pose when present

  const TrackerParams& for_class(const std::string& label) const {
    const auto it = per_class.find(label);
    return it == per_class.end() ? defaults : it->second;
  }

  /// Throws ConfigError when any threshold is out of range or the
  /// metric/motion combination cannot work.
  void validate() const;
};

/// One output row: a tracklet's state on one frame.
struct TrackRecord {
  std::string sequence_id;
  std::int64_t frame_index = 0;
  int track_id = 0;
  std::string class_label;
  double score = 0.0;
  BBox3D box;
  lifecycle::FrameSource source = lifecycle::FrameSource::Detection;
};

using TrackStream = std::vector<TrackRecord>;

/// Drop sub-t_low scores, run per-class NMS, and move boxes into the world
/// frame when an ego pose is present. Throws MalformedDetection on
/// non-finite fields.
std::vector<Detection> preprocess(const Frame& frame,
                                  const TrackerConfig& config);

/// Online tracker over one sequence: feed frames in order, collect outputs.
class Tracker {
 public:
  explicit Tracker(TrackerConfig config);

  /// Process the next frame; returns the records emitted for it (empty on
  /// non-evaluation frames). Throws OutOfOrderFrame when the index does not
  /// advance.
  TrackStream process_frame(const Frame& frame);

  const TrackerConfig& config() const { return config_; }

  /// Every tracklet created so far (including Dead ones), per class.
  const std::map<std::string, std::vector<lifecycle::Tracklet>>& tracklets()
      const {
    return universes_;
  }

 private:
  TrackerConfig config_;
  lifecycle::IdAllocator ids_;
  std::map<std::string, std::vector<lifecycle::Tracklet>> universes_;
  std::optional<std::int64_t> last_frame_;
  std::optional<std::string> sequence_;
};

/// Run one sequence through a fresh Tracker and concatenate the outputs.
TrackStream process_sequence(const std::vector<Frame>& frames,
                             const TrackerConfig& config);

/// Run many sequences, at most `threads` at a time (<=0 picks the hardware
/// count). Output order is by sequence position, independent of scheduling.
TrackStream process_sequences(const std::vector<std::vector<Frame>>& sequences,
                              const TrackerConfig& config, int threads = 0);

/// Split a (sequence_id, frame_index)-sorted frame list into per-sequence
/// runs, preserving order.
std::vector<std::vector<Frame>> split_sequences(std::vector<Frame> frames);

}  // namespace simpletrack::tracker
