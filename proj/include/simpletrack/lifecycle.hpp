#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "simpletrack/association.hpp"
#include "simpletrack/motion.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::lifecycle {

enum class TrackletStatus { Tentative, Active, Dead };

/// Where a per-frame state came from: an associated detection, or the motion
/// model carrying the tracklet through a miss / low-score match.
enum class FrameSource { Detection, MotionPrediction };

struct LifecycleConfig {
  double t_high = 0.5;  // stage-1 score threshold
  double t_low = 0.1;   // stage-2 floor; t_low == t_high gives one-stage
  int min_hits = 3;     // hits before a tracklet may output
  int max_miss = 2;     // consecutive misses before death
  double output_score = 0.5;       // detection-frame output threshold
  bool output_predictions = false; // emit prediction frames?
  double prediction_score_factor = 0.01;  // emitted score = factor * S_P
  bool stage2_counts_hit = true;   // stage-2 matches advance the hit streak
  bool compound_prediction_scores = false;  // decay S_P across miss frames
};

/// One frame of a tracklet's state history.
struct FrameRecord {
  std::int64_t frame_index = 0;
  BBox3D box;
  double score = 0.0;
  FrameSource source = FrameSource::Detection;
};

struct Tracklet {
  int id = 0;
  std::string class_label;
  motion::MotionModelKind motion = motion::MotionModelKind::KalmanFilter;

  motion::KalmanState kf{};      // Kalman-backed kinds
  BBox3D cv_box{};               // constant-velocity kind: last state
  Vec2 cv_velocity{0.0, 0.0};
  std::optional<Vec2> last_center;  // last associated detection center
  std::int64_t last_center_frame = 0;

  BBox3D predicted_box{};  // this frame's prior, set by the predict step

  int hits = 0;
  int misses = 0;
  std::int64_t age = 0;
  double last_score = 0.0;  // S_P: score of the most recent associated det
  TrackletStatus status = TrackletStatus::Tentative;
  std::vector<FrameRecord> history;

  bool alive() const { return status != TrackletStatus::Dead; }
};

/// Monotone id source; ids are never reused within a run.
class IdAllocator {
 public:
  int allocate() { return next_++; }

 private:
  int next_ = 1;
};

/// Knobs the association stages need beyond the lifecycle thresholds.
struct StepOptions {
  association::AssociationMetric metric{};
  association::MatchStrategy strategy = association::MatchStrategy::Hungarian;
  motion::KalmanParams kalman{};
};

struct StepResult {
  // Detection indices (into the input list) unmatched in stage 1; these are
  // the only birth candidates — stage-2 detections never spawn tracklets.
  std::vector<int> birth_candidates;
};

/// Run both association rounds against one frame's detections and apply the
/// per-tracklet consequences (motion update, hit/miss bookkeeping, status
/// transitions, history records). Tracklets must already hold this frame's
/// prediction in `predicted_box` (and, for Kalman kinds, the predicted prior
/// in `kf`). A tracklet dying on this frame gets no history record.
///
/// Stage 1 matches detections with score >= t_high and updates motion models.
/// Stage 2 matches leftover tracklets against detections with
/// t_low <= score < t_high; those keep the tracklet alive but do not touch the
/// motion model, and the frame state stays the prediction.
StepResult two_stage_step(std::vector<Tracklet>& tracklets,
                          const std::vector<Detection>& detections,
                          std::int64_t frame_index, const StepOptions& options,
                          const LifecycleConfig& config);

/// Spawn Tentative tracklets (hits = 1) from stage-1-unmatched detections.
std::vector<Tracklet> birth(const std::vector<Detection>& detections,
                            const std::vector<int>& candidates,
                            std::int64_t frame_index,
                            motion::MotionModelKind kind,
                            const motion::KalmanParams& kalman,
                            const LifecycleConfig& config, IdAllocator& ids);

/// Output policy: a frame is emitted iff the tracklet has matured
/// (hits >= min_hits or already Active) and either the frame carries an
/// associated detection scoring at least output_score, or it is a motion
/// prediction and prediction output is enabled.
bool should_output(const Tracklet& t, const FrameRecord& rec,
                   const LifecycleConfig& config);

}  // namespace simpletrack::lifecycle
