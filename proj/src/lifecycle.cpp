#include "simpletrack/lifecycle.hpp"

#include <algorithm>

namespace simpletrack::lifecycle {

namespace {

void promote_if_ready(Tracklet& t, const LifecycleConfig& config) {
  if (t.status == TrackletStatus::Tentative && t.hits >= config.min_hits) {
    t.status = TrackletStatus::Active;
  }
}

void apply_detection_match(Tracklet& t, const Detection& det,
                           std::int64_t frame_index,
                           const StepOptions& options,
                           const LifecycleConfig& config) {
  BBox3D frame_box;
  switch (t.motion) {
    case motion::MotionModelKind::KalmanFilter:
      t.kf = motion::kf_update(t.kf, det, options.kalman);
      frame_box = t.kf.box();
      break;
    case motion::MotionModelKind::KalmanPredictOnly:
      // Same filter evolution as above, but the detection itself is reported.
      t.kf = motion::kf_update(t.kf, det, options.kalman);
      frame_box = det.box;
      break;
    case motion::MotionModelKind::ConstantVelocity:
      if (det.velocity) {
        t.cv_velocity = *det.velocity;
      } else if (t.last_center) {
        const auto gap = frame_index - t.last_center_frame;
        if (gap > 0) {
          t.cv_velocity = Vec2{(det.box.cx - t.last_center->x) / gap,
                               (det.box.cy - t.last_center->y) / gap};
        }
      }
      t.cv_box = det.box;
      frame_box = det.box;
      break;
  }
  t.last_center = Vec2{det.box.cx, det.box.cy};
  t.last_center_frame = frame_index;
  t.hits += 1;
  t.misses = 0;
  t.last_score = det.score;
  t.history.push_back(
      {frame_index, frame_box, det.score, FrameSource::Detection});
  promote_if_ready(t, config);
}

// Shared by stage-2 matches and survivable misses: frame state is the
// prediction and the emitted score decays from S_P.
void record_prediction_frame(Tracklet& t, std::int64_t frame_index,
                             const LifecycleConfig& config) {
  t.history.push_back({frame_index, t.predicted_box,
                       config.prediction_score_factor * t.last_score,
                       FrameSource::MotionPrediction});
  if (t.motion == motion::MotionModelKind::ConstantVelocity) {
    t.cv_box = t.predicted_box;  // extrapolation continues from here
  }
}

void apply_stage2_match(Tracklet& t, const Detection& det,
                        std::int64_t frame_index, const LifecycleConfig& config) {
  record_prediction_frame(t, frame_index, config);
  if (config.stage2_counts_hit) t.hits += 1;
  t.misses = 0;
  t.last_score = det.score;  // after the record, so the emitted score uses
                             // the previous frame's S_P
  promote_if_ready(t, config);
}

void apply_miss(Tracklet& t, std::int64_t frame_index,
                const LifecycleConfig& config) {
  t.hits = 0;
  t.misses += 1;
  if (t.status == TrackletStatus::Tentative || t.misses >= config.max_miss) {
    t.status = TrackletStatus::Dead;  // dying frame emits nothing
    return;
  }
  record_prediction_frame(t, frame_index, config);
  if (config.compound_prediction_scores) {
    t.last_score *= config.prediction_score_factor;
  }
}

association::MatchResult solve(const association::CostMatrix& costs,
                               association::MatchStrategy strategy) {
  return strategy == association::MatchStrategy::Hungarian
             ? association::hungarian_match(costs)
             : association::greedy_match(costs);
}

// Run one association round between the given tracklets and detections.
association::MatchResult match_round(const std::vector<Tracklet>& tracklets,
                                     const std::vector<int>& track_idx,
                                     const std::vector<Detection>& dets,
                                     const StepOptions& options) {
  std::vector<BBox3D> preds;
  std::vector<const motion::KalmanState*> states;
  preds.reserve(track_idx.size());
  const bool need_states =
      options.metric.kind == association::MetricKind::Mahalanobis;
  for (int i : track_idx) {
    preds.push_back(tracklets[static_cast<size_t>(i)].predicted_box);
    if (need_states) {
      states.push_back(&tracklets[static_cast<size_t>(i)].kf);
    }
  }
  const auto costs = association::build_cost_matrix(preds, dets, options.metric,
                                                    states, options.kalman);
  return solve(costs, options.strategy);
}

}  // namespace

StepResult two_stage_step(std::vector<Tracklet>& tracklets,
                          const std::vector<Detection>& detections,
                          std::int64_t frame_index, const StepOptions& options,
                          const LifecycleConfig& config) {
  std::vector<int> live;
  for (size_t i = 0; i < tracklets.size(); ++i) {
    if (tracklets[i].alive()) {
      tracklets[i].age += 1;
      live.push_back(static_cast<int>(i));
    }
  }

  std::vector<int> high, low;
  for (size_t j = 0; j < detections.size(); ++j) {
    const double s = detections[j].score;
    if (s >= config.t_high) {
      high.push_back(static_cast<int>(j));
    } else if (s >= config.t_low) {
      low.push_back(static_cast<int>(j));
    }
    // Below t_low: pre-processing drops these; ignore if handed one anyway.
  }

  // Stage 1: predictions vs high-score detections.
  std::vector<Detection> high_dets;
  high_dets.reserve(high.size());
  for (int j : high) high_dets.push_back(detections[static_cast<size_t>(j)]);
  const auto stage1 = match_round(tracklets, live, high_dets, options);

  std::vector<char> matched(tracklets.size(), 0);
  for (const auto& [r, c] : stage1.matches) {
    const int ti = live[static_cast<size_t>(r)];
    apply_detection_match(tracklets[static_cast<size_t>(ti)],
                          high_dets[static_cast<size_t>(c)], frame_index,
                          options, config);
    matched[static_cast<size_t>(ti)] = 1;
  }

  StepResult result;
  for (int c : stage1.unmatched_cols) {
    result.birth_candidates.push_back(high[static_cast<size_t>(c)]);
  }

  // Stage 2: leftover tracklets vs the low-score band.
  std::vector<int> leftover;
  for (int i : live) {
    if (!matched[static_cast<size_t>(i)]) leftover.push_back(i);
  }
  if (!leftover.empty() && !low.empty()) {
    std::vector<Detection> low_dets;
    low_dets.reserve(low.size());
    for (int j : low) low_dets.push_back(detections[static_cast<size_t>(j)]);
    const auto stage2 = match_round(tracklets, leftover, low_dets, options);
    for (const auto& [r, c] : stage2.matches) {
      const int ti = leftover[static_cast<size_t>(r)];
      apply_stage2_match(tracklets[static_cast<size_t>(ti)],
                         low_dets[static_cast<size_t>(c)], frame_index, config);
      matched[static_cast<size_t>(ti)] = 1;
    }
  }

  for (int i : live) {
    if (!matched[static_cast<size_t>(i)]) {
      apply_miss(tracklets[static_cast<size_t>(i)], frame_index, config);
    }
  }
  return result;
}

std::vector<Tracklet> birth(const std::vector<Detection>& detections,
                            const std::vector<int>& candidates,
                            std::int64_t frame_index,
                            motion::MotionModelKind kind,
                            const motion::KalmanParams& kalman,
                            const LifecycleConfig& config, IdAllocator& ids) {
  std::vector<Tracklet> born;
  born.reserve(candidates.size());
  for (int j : candidates) {
    const Detection& det = detections[static_cast<size_t>(j)];
    Tracklet t;
    t.id = ids.allocate();
    t.class_label = det.class_label;
    t.motion = kind;
    t.kf = motion::kf_init(det, kalman);
    t.cv_box = det.box;
    if (det.velocity) t.cv_velocity = *det.velocity;
    t.last_center = Vec2{det.box.cx, det.box.cy};
    t.last_center_frame = frame_index;
    t.predicted_box = det.box;
    t.hits = 1;
    t.misses = 0;
    t.age = 0;
    t.last_score = det.score;
    t.history.push_back(
        {frame_index, det.box, det.score, FrameSource::Detection});
    promote_if_ready(t, config);
    born.push_back(std::move(t));
  }
  return born;
}

bool should_output(const Tracklet& t, const FrameRecord& rec,
                   const LifecycleConfig& config) {
  const bool mature =
      t.hits >= config.min_hits || t.status == TrackletStatus::Active;
  if (!mature) return false;
  if (rec.source == FrameSource::Detection) {
    return rec.score >= config.output_score;
  }
  return config.output_predictions;
}

}  // namespace simpletrack::lifecycle
