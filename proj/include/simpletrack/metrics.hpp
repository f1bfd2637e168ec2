#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simpletrack/tracker.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::metrics {

struct GtRecord {
  std::string sequence_id;
  std::int64_t frame_index = 0;
  int gt_id = 0;
  std::string class_label;
  BBox3D box;
};

/// How track boxes are matched to ground-truth boxes per frame.
struct MatcherConfig {
  double default_iou_floor = 0.5;                // vehicle-like classes
  std::map<std::string, double> class_iou_floor  // pedestrian-like classes
      {{"pedestrian", 0.3}};
  bool use_center_distance = false;  // alternative: BEV center distance
  double center_distance = 2.0;      // meters, when use_center_distance

  double floor_for(const std::string& cls) const {
    const auto it = class_iou_floor.find(cls);
    return it == class_iou_floor.end() ? default_iou_floor : it->second;
  }
};

/// One frame's track<->GT correspondence for one class.
struct FrameMatch {
  struct Pair {
    int gt_id = 0;
    int track_id = 0;
    double iou = 0.0;  // 1 - distance/limit when distance matching
  };
  std::vector<Pair> matches;
  std::vector<int> unmatched_tracks;  // indices into the track list
  std::vector<int> unmatched_gts;     // indices into the gt list
};

/// Greedy highest-overlap matching with carry-over: a GT keeps its previous
/// track when that pairing is still feasible this frame.
FrameMatch match_frame(const std::vector<tracker::TrackRecord>& tracks,
                       const std::vector<GtRecord>& gts,
                       const MatcherConfig& matcher,
                       const std::map<int, int>& last_track_for_gt);

struct IdSwitchEvent {
  std::string sequence_id;
  std::string class_label;
  std::int64_t frame_index = 0;
  int gt_id = 0;
  int old_track_id = 0;
  int new_track_id = 0;
  bool wrong_association = false;  // else early termination
};

struct AmotaPoint {
  double target_recall = 0.0;
  bool achieved = false;
  double threshold = 0.0;
  double achieved_recall = 0.0;
  double motar = 0.0;
  double motp = 1.0;
};

struct ClassReport {
  std::string class_label;
  long gt = 0;
  long matches = 0;
  long fp = 0;
  long fn = 0;
  long ids = 0;
  long ids_wrong_association = 0;
  long ids_early_termination = 0;
  double mota = 0.0;
  double motp = 0.0;  // mean (1 - overlap) over matches
  double ids_pct = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double recall = 0.0;
  std::optional<double> amota;
  std::optional<double> amotp;
  std::vector<AmotaPoint> amota_points;
};

struct EvalReport {
  std::vector<ClassReport> per_class;  // classes present in the ground truth
  ClassReport all;                     // micro-average over everything
  std::vector<IdSwitchEvent> id_switches;
};

/// CLEAR-MOT over full streams. Throws EmptyGroundTruth when gts is empty.
EvalReport clear_mot(const tracker::TrackStream& tracks,
                     const std::vector<GtRecord>& gts,
                     const MatcherConfig& matcher = {});

/// Adds the recall-swept AMOTA/AMOTP numbers to a CLEAR-MOT report.
/// Thresholds are picked from true-positive scores so each of the
/// `num_points` target recalls (evenly spaced in [min_recall, 1]) is hit as
/// closely as possible; unachieved targets contribute MOTAR 0 / MOTP 1.
EvalReport evaluate(const tracker::TrackStream& tracks,
                    const std::vector<GtRecord>& gts,
                    const MatcherConfig& matcher = {}, bool with_amota = false,
                    int num_points = 40, double min_recall = 0.1);

/// Fill interior frame gaps of each tracklet by linear interpolation (yaw by
/// shortest arc) and replace every score with the tracklet's mean score over
/// its pre-interpolation frames. Idempotent; no extrapolation.
tracker::TrackStream interpolate_tracklets(const tracker::TrackStream& tracks);

/// Label each ID switch: wrong_association when the previous track is matched
/// to a different ground truth on the switch frame, early termination
/// otherwise (the previous track died or went silent for that object).
std::vector<IdSwitchEvent> classify_id_switches(
    const tracker::TrackStream& tracks, const std::vector<GtRecord>& gts,
    const MatcherConfig& matcher = {});

/// Keep only track frames overlapping a same-class GT box at iou_floor or
/// better (the output-policy upper bound).
tracker::TrackStream oracle_gt_output(const tracker::TrackStream& tracks,
                                      const std::vector<GtRecord>& gts,
                                      const MatcherConfig& matcher = {});

/// Greedily match raw detections to GT per frame; matched detections become
/// track frames carrying the GT id, unmatched detections are dropped.
tracker::TrackStream oracle_gt_all(const std::vector<Frame>& frames,
                                   const std::vector<GtRecord>& gts,
                                   const MatcherConfig& matcher = {});

struct PrecisionRecall {
  long dets = 0;
  long matched = 0;
  long gt = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Detection-level precision/recall against GT (greedy per-frame matching).
PrecisionRecall detection_pr(const std::vector<Frame>& frames,
                             const std::vector<GtRecord>& gts,
                             const MatcherConfig& matcher = {});

/// Human-readable report with the formulas stated in the header.
std::string format_report(const EvalReport& report);

}  // namespace simpletrack::metrics
