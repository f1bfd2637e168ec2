#include "simpletrack/tracker.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "simpletrack/geometry.hpp"

namespace simpletrack::tracker {

namespace {

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate_params(const TrackerParams& p, const std::string& scope) {
  const auto& lc = p.lifecycle;
  check_range(p.nms_iou >= 0.0 && p.nms_iou <= 1.0,
              scope + "nms_iou must lie in [0, 1]");
  check_range(std::isfinite(p.metric.gate), scope + "gate must be finite");
  check_range(lc.t_low >= 0.0 && lc.t_low <= lc.t_high && lc.t_high <= 1.0,
              scope + "score thresholds must satisfy 0 <= t_low <= t_high <= 1");
  check_range(lc.min_hits >= 1, scope + "min_hits must be >= 1");
  check_range(lc.max_miss >= 1, scope + "max_miss must be >= 1");
  check_range(lc.output_score >= 0.0 && lc.output_score <= 1.0,
              scope + "output_score must lie in [0, 1]");
  check_range(lc.prediction_score_factor >= 0.0 &&
                  lc.prediction_score_factor <= 1.0,
              scope + "prediction_score_factor must lie in [0, 1]");
  check_range(p.kalman.initial_variance > 0.0 &&
                  p.kalman.initial_velocity_variance > 0.0 &&
                  p.kalman.process_noise > 0.0 &&
                  p.kalman.velocity_process_noise > 0.0 &&
                  p.kalman.observation_noise > 0.0,
              scope + "kalman variances must be positive");
  if (p.metric.kind == association::MetricKind::Mahalanobis &&
      p.motion == motion::MotionModelKind::ConstantVelocity) {
    throw ConfigError(scope +
                      "mahalanobis association needs a kalman-backed motion "
                      "model");
  }
}

}  // namespace

void TrackerConfig::validate() const {
  validate_params(defaults, "");
  for (const auto& [cls, params] : per_class) {
    validate_params(params, cls + ": ");
  }
}

std::vector<Detection> preprocess(const Frame& frame,
                                  const TrackerConfig& config) {
  std::map<std::string, std::vector<Detection>> by_class;
  for (const Detection& det : frame.detections) {
    if (!det.box.valid() || !std::isfinite(det.score) ||
        (det.velocity && (!std::isfinite(det.velocity->x) ||
                          !std::isfinite(det.velocity->y)))) {
      throw MalformedDetection("non-finite detection on frame " +
                               std::to_string(frame.frame_index));
    }
    const TrackerParams& p = config.for_class(det.class_label);
    if (det.score < p.lifecycle.t_low) continue;
    by_class[det.class_label].push_back(det);
  }
  std::vector<Detection> out;
  for (auto& [cls, dets] : by_class) {
    const TrackerParams& p = config.for_class(cls);
    auto kept = geometry::nms(dets, p.nms_iou);
    out.insert(out.end(), std::make_move_iterator(kept.begin()),
               std::make_move_iterator(kept.end()));
  }
  if (frame.ego_pose && config.world_frame) {
    for (Detection& det : out) {
      det.box = frame.ego_pose->apply(det.box);
      if (det.velocity) *det.velocity = frame.ego_pose->rotate(*det.velocity);
    }
  }
  return out;
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)) {
  config_.validate();
}

TrackStream Tracker::process_frame(const Frame& frame) {
  if (sequence_ && frame.sequence_id != *sequence_) {
    throw std::invalid_argument("tracker fed frames from two sequences: '" +
                                *sequence_ + "' and '" + frame.sequence_id +
                                "'");
  }
  if (last_frame_ && frame.frame_index <= *last_frame_) {
    throw OutOfOrderFrame("frame " + std::to_string(frame.frame_index) +
                          " after frame " + std::to_string(*last_frame_) +
                          " in sequence '" + frame.sequence_id + "'");
  }
  if (!sequence_) sequence_ = frame.sequence_id;

  std::map<std::string, std::vector<Detection>> by_class;
  for (Detection& det : preprocess(frame, config_)) {
    by_class[det.class_label].push_back(std::move(det));
  }

  const int dt =
      last_frame_ ? static_cast<int>(frame.frame_index - *last_frame_) : 1;

  std::set<std::string> classes;
  for (const auto& [cls, tracklets] : universes_) classes.insert(cls);
  for (const auto& [cls, dets] : by_class) classes.insert(cls);

  static const std::vector<Detection> kNoDetections;
  TrackStream out;
  for (const std::string& cls : classes) {
    const TrackerParams& p = config_.for_class(cls);
    auto& tracklets = universes_[cls];

    for (auto& t : tracklets) {
      if (!t.alive()) continue;
      if (t.motion == motion::MotionModelKind::ConstantVelocity) {
        t.predicted_box = motion::cv_predict(t.cv_box, t.cv_velocity, dt);
      } else {
        t.kf = motion::kf_predict(t.kf, dt, p.kalman);
        t.predicted_box = t.kf.box();
      }
    }

    const auto it = by_class.find(cls);
    const std::vector<Detection>& dets =
        it == by_class.end() ? kNoDetections : it->second;

    const lifecycle::StepOptions options{p.metric, p.strategy, p.kalman};
    const auto step = lifecycle::two_stage_step(tracklets, dets,
                                                frame.frame_index, options,
                                                p.lifecycle);
    auto born = lifecycle::birth(dets, step.birth_candidates,
                                 frame.frame_index, p.motion, p.kalman,
                                 p.lifecycle, ids_);
    for (auto& t : born) tracklets.push_back(std::move(t));

    if (!frame.is_evaluation_frame) continue;
    for (const auto& t : tracklets) {
      if (!t.alive() || t.history.empty()) continue;
      const lifecycle::FrameRecord& rec = t.history.back();
      if (rec.frame_index != frame.frame_index) continue;
      if (!lifecycle::should_output(t, rec, p.lifecycle)) continue;
      out.push_back({*sequence_, frame.frame_index, t.id, cls, rec.score,
                     rec.box, rec.source});
    }
  }
  last_frame_ = frame.frame_index;
  return out;
}

TrackStream process_sequence(const std::vector<Frame>& frames,
                             const TrackerConfig& config) {
  Tracker tracker(config);
  TrackStream out;
  for (const Frame& frame : frames) {
    auto records = tracker.process_frame(frame);
    out.insert(out.end(), std::make_move_iterator(records.begin()),
               std::make_move_iterator(records.end()));
  }
  return out;
}

TrackStream process_sequences(const std::vector<std::vector<Frame>>& sequences,
                              const TrackerConfig& config, int threads) {
  config.validate();  // fail before spawning workers
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min<int>(threads, static_cast<int>(sequences.size()));

  std::vector<TrackStream> results(sequences.size());
  std::vector<std::string> errors(sequences.size());
  if (threads <= 1) {
    for (size_t i = 0; i < sequences.size(); ++i) {
      results[i] = process_sequence(sequences[i], config);
    }
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next.fetch_add(1); i < sequences.size();
           i = next.fetch_add(1)) {
        try {
          results[i] = process_sequence(sequences[i], config);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& err : errors) {
      if (!err.empty()) throw std::runtime_error(err);
    }
  }

  TrackStream out;
  for (auto& r : results) {
    out.insert(out.end(), std::make_move_iterator(r.begin()),
               std::make_move_iterator(r.end()));
  }
  return out;
}

std::vector<std::vector<Frame>> split_sequences(std::vector<Frame> frames) {
  std::vector<std::vector<Frame>> out;
  for (auto& frame : frames) {
    if (out.empty() || out.back().back().sequence_id != frame.sequence_id) {
      out.emplace_back();
    }
    out.back().push_back(std::move(frame));
  }
  return out;
}

}  // namespace simpletrack::tracker
