#include "simpletrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "simpletrack/geometry.hpp"

namespace simpletrack::metrics {

namespace {

// Overlap if the pair is feasible, -1 otherwise. Distance matching maps to
// 1 - d/limit so "higher is better" holds for both modes.
double pair_overlap(const BBox3D& track, const BBox3D& gt,
                    const MatcherConfig& m, double iou_floor) {
  if (m.use_center_distance) {
    const double d = geometry::bev_center_distance(track, gt);
    return d <= m.center_distance ? 1.0 - d / m.center_distance : -1.0;
  }
  const double iou = geometry::iou_3d(track, gt);
  return iou >= iou_floor ? iou : -1.0;
}

FrameMatch match_ptrs(const std::vector<const tracker::TrackRecord*>& tracks,
                      const std::vector<const GtRecord*>& gts,
                      const MatcherConfig& matcher,
                      const std::map<int, int>& last_track_for_gt) {
  const std::string cls = !gts.empty()
                              ? gts.front()->class_label
                              : (!tracks.empty() ? tracks.front()->class_label
                                                 : std::string());
  const double floor_value = matcher.floor_for(cls);
  const int nt = static_cast<int>(tracks.size());
  const int ng = static_cast<int>(gts.size());

  std::vector<double> ov(static_cast<size_t>(nt) * ng, -1.0);
  for (int g = 0; g < ng; ++g) {
    for (int t = 0; t < nt; ++t) {
      ov[static_cast<size_t>(g) * nt + t] = pair_overlap(
          tracks[static_cast<size_t>(t)]->box, gts[static_cast<size_t>(g)]->box,
          matcher, floor_value);
    }
  }

  std::vector<char> gt_taken(ng, 0), track_taken(nt, 0);
  FrameMatch out;

  // Carry-over: each GT keeps its last-known track when still feasible.
  std::vector<int> gt_order(ng);
  std::iota(gt_order.begin(), gt_order.end(), 0);
  std::sort(gt_order.begin(), gt_order.end(), [&](int a, int b) {
    return gts[static_cast<size_t>(a)]->gt_id < gts[static_cast<size_t>(b)]->gt_id;
  });
  for (int g : gt_order) {
    const auto it = last_track_for_gt.find(gts[static_cast<size_t>(g)]->gt_id);
    if (it == last_track_for_gt.end()) continue;
    int ti = -1;
    for (int t = 0; t < nt; ++t) {
      if (tracks[static_cast<size_t>(t)]->track_id == it->second) {
        ti = t;
        break;
      }
    }
    if (ti < 0 || track_taken[static_cast<size_t>(ti)]) continue;
    const double o = ov[static_cast<size_t>(g) * nt + ti];
    if (o < 0.0) continue;
    out.matches.push_back({gts[static_cast<size_t>(g)]->gt_id,
                           tracks[static_cast<size_t>(ti)]->track_id, o});
    gt_taken[static_cast<size_t>(g)] = 1;
    track_taken[static_cast<size_t>(ti)] = 1;
  }

  // Greedy highest-overlap-first over what is left.
  struct Cand {
    double o;
    int gt_id;
    int track_id;
    int g, t;
  };
  std::vector<Cand> cands;
  for (int g = 0; g < ng; ++g) {
    if (gt_taken[static_cast<size_t>(g)]) continue;
    for (int t = 0; t < nt; ++t) {
      if (track_taken[static_cast<size_t>(t)]) continue;
      const double o = ov[static_cast<size_t>(g) * nt + t];
      if (o >= 0.0) {
        cands.push_back({o, gts[static_cast<size_t>(g)]->gt_id,
                         tracks[static_cast<size_t>(t)]->track_id, g, t});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.o != b.o) return a.o > b.o;
    if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
    return a.track_id < b.track_id;
  });
  for (const Cand& c : cands) {
    if (gt_taken[static_cast<size_t>(c.g)] ||
        track_taken[static_cast<size_t>(c.t)]) {
      continue;
    }
    gt_taken[static_cast<size_t>(c.g)] = 1;
    track_taken[static_cast<size_t>(c.t)] = 1;
    out.matches.push_back({c.gt_id, c.track_id, c.o});
  }

  for (int t = 0; t < nt; ++t) {
    if (!track_taken[static_cast<size_t>(t)]) out.unmatched_tracks.push_back(t);
  }
  for (int g = 0; g < ng; ++g) {
    if (!gt_taken[static_cast<size_t>(g)]) out.unmatched_gts.push_back(g);
  }
  return out;
}

struct Accum {
  long gt = 0;
  long matches = 0;
  long fp = 0;
  long fn = 0;
  long ids = 0;
  long wrong = 0;
  long early = 0;
  double one_minus_overlap_sum = 0.0;
  std::vector<double> tp_scores;
  std::vector<IdSwitchEvent> events;

  void add(const Accum& o) {
    gt += o.gt;
    matches += o.matches;
    fp += o.fp;
    fn += o.fn;
    ids += o.ids;
    wrong += o.wrong;
    early += o.early;
    one_minus_overlap_sum += o.one_minus_overlap_sum;
    events.insert(events.end(), o.events.begin(), o.events.end());
  }
};

// seq -> cls -> frame -> records
template <typename T>
using Index = std::map<std::string,
                       std::map<std::string,
                                std::map<std::int64_t, std::vector<const T*>>>>;

std::map<std::string, Accum> accumulate(const tracker::TrackStream& tracks,
                                        const std::vector<GtRecord>& gts,
                                        const MatcherConfig& matcher) {
  Index<tracker::TrackRecord> track_index;
  for (const auto& r : tracks) {
    track_index[r.sequence_id][r.class_label][r.frame_index].push_back(&r);
  }
  Index<GtRecord> gt_index;
  for (const auto& r : gts) {
    gt_index[r.sequence_id][r.class_label][r.frame_index].push_back(&r);
  }

  std::set<std::pair<std::string, std::string>> universe;
  for (const auto& [seq, classes] : track_index) {
    for (const auto& [cls, frames] : classes) universe.insert({seq, cls});
  }
  for (const auto& [seq, classes] : gt_index) {
    for (const auto& [cls, frames] : classes) universe.insert({seq, cls});
  }

  static const std::map<std::int64_t, std::vector<const tracker::TrackRecord*>>
      kNoTrackFrames;
  static const std::map<std::int64_t, std::vector<const GtRecord*>>
      kNoGtFrames;
  static const std::vector<const tracker::TrackRecord*> kNoTracks;
  static const std::vector<const GtRecord*> kNoGts;

  std::map<std::string, Accum> per_class;
  for (const auto& [seq, cls] : universe) {
    const auto* tf = &kNoTrackFrames;
    if (const auto its = track_index.find(seq); its != track_index.end()) {
      if (const auto itc = its->second.find(cls); itc != its->second.end()) {
        tf = &itc->second;
      }
    }
    const auto* gf = &kNoGtFrames;
    if (const auto its = gt_index.find(seq); its != gt_index.end()) {
      if (const auto itc = its->second.find(cls); itc != its->second.end()) {
        gf = &itc->second;
      }
    }

    std::set<std::int64_t> frames;
    for (const auto& [f, v] : *tf) frames.insert(f);
    for (const auto& [f, v] : *gf) frames.insert(f);

    Accum& acc = per_class[cls];
    std::map<int, int> last;  // gt_id -> last matched track_id
    for (const std::int64_t f : frames) {
      const auto itt = tf->find(f);
      const auto itg = gf->find(f);
      const auto& tv = itt == tf->end() ? kNoTracks : itt->second;
      const auto& gv = itg == gf->end() ? kNoGts : itg->second;

      const FrameMatch fm = match_ptrs(tv, gv, matcher, last);
      acc.gt += static_cast<long>(gv.size());
      acc.fp += static_cast<long>(fm.unmatched_tracks.size());
      acc.fn += static_cast<long>(fm.unmatched_gts.size());
      for (const auto& pr : fm.matches) {
        acc.matches += 1;
        acc.one_minus_overlap_sum += 1.0 - pr.iou;
        for (const auto* tr : tv) {
          if (tr->track_id == pr.track_id) {
            acc.tp_scores.push_back(tr->score);
            break;
          }
        }
        const auto it = last.find(pr.gt_id);
        if (it != last.end() && it->second != pr.track_id) {
          acc.ids += 1;
          IdSwitchEvent ev;
          ev.sequence_id = seq;
          ev.class_label = cls;
          ev.frame_index = f;
          ev.gt_id = pr.gt_id;
          ev.old_track_id = it->second;
          ev.new_track_id = pr.track_id;
          for (const auto& other : fm.matches) {
            if (other.track_id == ev.old_track_id && other.gt_id != pr.gt_id) {
              ev.wrong_association = true;
              break;
            }
          }
          (ev.wrong_association ? acc.wrong : acc.early) += 1;
          acc.events.push_back(ev);
        }
      }
      for (const auto& pr : fm.matches) last[pr.gt_id] = pr.track_id;
    }
  }
  return per_class;
}

ClassReport finalize(const std::string& label, const Accum& a) {
  ClassReport r;
  r.class_label = label;
  r.gt = a.gt;
  r.matches = a.matches;
  r.fp = a.fp;
  r.fn = a.fn;
  r.ids = a.ids;
  r.ids_wrong_association = a.wrong;
  r.ids_early_termination = a.early;
  const double gt = static_cast<double>(a.gt);
  if (a.gt > 0) {
    r.mota = 1.0 - static_cast<double>(a.fp + a.fn + a.ids) / gt;
    r.ids_pct = 100.0 * static_cast<double>(a.ids) / gt;
    r.fp_rate = static_cast<double>(a.fp) / gt;
    r.fn_rate = static_cast<double>(a.fn) / gt;
    r.recall = static_cast<double>(a.matches) / gt;
  }
  r.motp = a.matches > 0
               ? a.one_minus_overlap_sum / static_cast<double>(a.matches)
               : 0.0;
  return r;
}

EvalReport build_report(const std::map<std::string, Accum>& per_class) {
  EvalReport rep;
  Accum total;
  for (const auto& [cls, acc] : per_class) {
    total.add(acc);
    if (acc.gt > 0) rep.per_class.push_back(finalize(cls, acc));
    rep.id_switches.insert(rep.id_switches.end(), acc.events.begin(),
                           acc.events.end());
  }
  rep.all = finalize("all", total);
  return rep;
}

}  // namespace

FrameMatch match_frame(const std::vector<tracker::TrackRecord>& tracks,
                       const std::vector<GtRecord>& gts,
                       const MatcherConfig& matcher,
                       const std::map<int, int>& last_track_for_gt) {
  std::vector<const tracker::TrackRecord*> tp;
  tp.reserve(tracks.size());
  for (const auto& t : tracks) tp.push_back(&t);
  std::vector<const GtRecord*> gp;
  gp.reserve(gts.size());
  for (const auto& g : gts) gp.push_back(&g);
  return match_ptrs(tp, gp, matcher, last_track_for_gt);
}

EvalReport clear_mot(const tracker::TrackStream& tracks,
                     const std::vector<GtRecord>& gts,
                     const MatcherConfig& matcher) {
  if (gts.empty()) {
    throw EmptyGroundTruth("cannot evaluate against empty ground truth");
  }
  return build_report(accumulate(tracks, gts, matcher));
}

EvalReport evaluate(const tracker::TrackStream& tracks,
                    const std::vector<GtRecord>& gts,
                    const MatcherConfig& matcher, bool with_amota,
                    int num_points, double min_recall) {
  if (gts.empty()) {
    throw EmptyGroundTruth("cannot evaluate against empty ground truth");
  }
  const auto per_class = accumulate(tracks, gts, matcher);
  EvalReport rep = build_report(per_class);
  if (!with_amota) return rep;

  std::map<std::string, tracker::TrackStream> class_tracks;
  for (const auto& r : tracks) class_tracks[r.class_label].push_back(r);
  std::map<std::string, std::vector<GtRecord>> class_gts;
  for (const auto& g : gts) class_gts[g.class_label].push_back(g);

  double amota_sum = 0.0, amotp_sum = 0.0;
  long scored_classes = 0;
  for (auto& cr : rep.per_class) {
    std::vector<double> tp_scores = per_class.at(cr.class_label).tp_scores;
    std::sort(tp_scores.begin(), tp_scores.end(), std::greater<double>());
    const long P = cr.gt;
    const auto& ct = class_tracks[cr.class_label];
    const auto& cg = class_gts[cr.class_label];

    double motar_sum = 0.0, motp_sum = 0.0;
    for (int i = 0; i < num_points; ++i) {
      const double target =
          num_points == 1
              ? 1.0
              : min_recall + (1.0 - min_recall) * i / (num_points - 1);
      AmotaPoint pt;
      pt.target_recall = target;
      const long k = std::max<long>(
          1, static_cast<long>(
                 std::ceil(target * static_cast<double>(P) - 1e-9)));
      if (k <= static_cast<long>(tp_scores.size())) {
        const double threshold = tp_scores[static_cast<size_t>(k - 1)];
        tracker::TrackStream filtered;
        for (const auto& r : ct) {
          if (r.score >= threshold) filtered.push_back(r);
        }
        const auto sub = accumulate(filtered, cg, matcher);
        const Accum& a = sub.at(cr.class_label);
        if (a.matches > 0) {
          const double r = static_cast<double>(a.matches) /
                           static_cast<double>(P);
          // nuScenes normalization at the recall this threshold achieves.
          const double motar =
              1.0 - (static_cast<double>(a.ids + a.fp + a.fn) -
                     (1.0 - r) * static_cast<double>(P)) /
                        (r * static_cast<double>(P));
          pt.achieved = true;
          pt.threshold = threshold;
          pt.achieved_recall = r;
          pt.motar = std::max(0.0, motar);
          pt.motp = a.one_minus_overlap_sum / static_cast<double>(a.matches);
        }
      }
      motar_sum += pt.motar;
      motp_sum += pt.motp;
      cr.amota_points.push_back(pt);
    }
    cr.amota = motar_sum / num_points;
    cr.amotp = motp_sum / num_points;
    amota_sum += *cr.amota;
    amotp_sum += *cr.amotp;
    scored_classes += 1;
  }
  if (scored_classes > 0) {
    rep.all.amota = amota_sum / static_cast<double>(scored_classes);
    rep.all.amotp = amotp_sum / static_cast<double>(scored_classes);
  }
  return rep;
}

tracker::TrackStream interpolate_tracklets(
    const tracker::TrackStream& tracks) {
  std::map<std::pair<std::string, int>, std::vector<tracker::TrackRecord>>
      by_tracklet;
  for (const auto& r : tracks) {
    by_tracklet[{r.sequence_id, r.track_id}].push_back(r);
  }

  tracker::TrackStream out;
  for (auto& [key, recs] : by_tracklet) {
    std::sort(recs.begin(), recs.end(),
              [](const tracker::TrackRecord& a, const tracker::TrackRecord& b) {
                return a.frame_index < b.frame_index;
              });
    // Running mean is exact when all inputs are equal, which keeps the
    // rescoring idempotent.
    double mean = 0.0;
    long n = 0;
    for (const auto& r : recs) {
      n += 1;
      mean += (r.score - mean) / static_cast<double>(n);
    }
    for (size_t i = 0; i < recs.size(); ++i) {
      tracker::TrackRecord r = recs[i];
      r.score = mean;
      out.push_back(r);
      if (i + 1 == recs.size()) continue;
      const auto& a = recs[i];
      const auto& b = recs[i + 1];
      const std::int64_t gap = b.frame_index - a.frame_index;
      for (std::int64_t f = a.frame_index + 1; f < b.frame_index; ++f) {
        const double t = static_cast<double>(f - a.frame_index) /
                         static_cast<double>(gap);
        tracker::TrackRecord mid = a;
        mid.frame_index = f;
        mid.box.cx = a.box.cx + t * (b.box.cx - a.box.cx);
        mid.box.cy = a.box.cy + t * (b.box.cy - a.box.cy);
        mid.box.cz = a.box.cz + t * (b.box.cz - a.box.cz);
        mid.box.length = a.box.length + t * (b.box.length - a.box.length);
        mid.box.width = a.box.width + t * (b.box.width - a.box.width);
        mid.box.height = a.box.height + t * (b.box.height - a.box.height);
        mid.box.yaw =
            normalize_yaw(a.box.yaw + t * yaw_diff(b.box.yaw, a.box.yaw));
        mid.score = mean;
        mid.source = lifecycle::FrameSource::MotionPrediction;
        out.push_back(mid);
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const tracker::TrackRecord& a, const tracker::TrackRecord& b) {
              if (a.sequence_id != b.sequence_id) {
                return a.sequence_id < b.sequence_id;
              }
              if (a.frame_index != b.frame_index) {
                return a.frame_index < b.frame_index;
              }
              if (a.class_label != b.class_label) {
                return a.class_label < b.class_label;
              }
              return a.track_id < b.track_id;
            });
  return out;
}

std::vector<IdSwitchEvent> classify_id_switches(
    const tracker::TrackStream& tracks, const std::vector<GtRecord>& gts,
    const MatcherConfig& matcher) {
  std::vector<IdSwitchEvent> events;
  for (const auto& [cls, acc] : accumulate(tracks, gts, matcher)) {
    events.insert(events.end(), acc.events.begin(), acc.events.end());
  }
  return events;
}

tracker::TrackStream oracle_gt_output(const tracker::TrackStream& tracks,
                                      const std::vector<GtRecord>& gts,
                                      const MatcherConfig& matcher) {
  Index<GtRecord> gt_index;
  for (const auto& r : gts) {
    gt_index[r.sequence_id][r.class_label][r.frame_index].push_back(&r);
  }
  tracker::TrackStream out;
  for (const auto& r : tracks) {
    const auto its = gt_index.find(r.sequence_id);
    if (its == gt_index.end()) continue;
    const auto itc = its->second.find(r.class_label);
    if (itc == its->second.end()) continue;
    const auto itf = itc->second.find(r.frame_index);
    if (itf == itc->second.end()) continue;
    const double floor_value = matcher.floor_for(r.class_label);
    for (const GtRecord* g : itf->second) {
      if (pair_overlap(r.box, g->box, matcher, floor_value) >= 0.0) {
        out.push_back(r);
        break;
      }
    }
  }
  return out;
}

tracker::TrackStream oracle_gt_all(const std::vector<Frame>& frames,
                                   const std::vector<GtRecord>& gts,
                                   const MatcherConfig& matcher) {
  Index<GtRecord> gt_index;
  for (const auto& r : gts) {
    gt_index[r.sequence_id][r.class_label][r.frame_index].push_back(&r);
  }

  tracker::TrackStream out;
  for (const Frame& frame : frames) {
    std::map<std::string, std::vector<const Detection*>> by_class;
    for (const Detection& det : frame.detections) {
      by_class[det.class_label].push_back(&det);
    }
    for (const auto& [cls, dets] : by_class) {
      std::vector<const GtRecord*> gv;
      if (const auto its = gt_index.find(frame.sequence_id);
          its != gt_index.end()) {
        if (const auto itc = its->second.find(cls); itc != its->second.end()) {
          if (const auto itf = itc->second.find(frame.frame_index);
              itf != itc->second.end()) {
            gv = itf->second;
          }
        }
      }
      if (gv.empty()) continue;
      const double floor_value = matcher.floor_for(cls);

      struct Cand {
        double o;
        int gt_id;
        int d;
        int g;
      };
      std::vector<Cand> cands;
      for (size_t g = 0; g < gv.size(); ++g) {
        for (size_t d = 0; d < dets.size(); ++d) {
          const double o =
              pair_overlap(dets[d]->box, gv[g]->box, matcher, floor_value);
          if (o >= 0.0) {
            cands.push_back({o, gv[g]->gt_id, static_cast<int>(d),
                             static_cast<int>(g)});
          }
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.o != b.o) return a.o > b.o;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.d < b.d;
      });
      std::vector<char> gt_taken(gv.size(), 0), det_taken(dets.size(), 0);
      for (const Cand& c : cands) {
        if (gt_taken[static_cast<size_t>(c.g)] ||
            det_taken[static_cast<size_t>(c.d)]) {
          continue;
        }
        gt_taken[static_cast<size_t>(c.g)] = 1;
        det_taken[static_cast<size_t>(c.d)] = 1;
        const Detection& det = *dets[static_cast<size_t>(c.d)];
        out.push_back({frame.sequence_id, frame.frame_index, c.gt_id, cls,
                       det.score, det.box,
                       lifecycle::FrameSource::Detection});
      }
    }
  }
  return out;
}

PrecisionRecall detection_pr(const std::vector<Frame>& frames,
                             const std::vector<GtRecord>& gts,
                             const MatcherConfig& matcher) {
  PrecisionRecall pr;
  for (const Frame& frame : frames) {
    pr.dets += static_cast<long>(frame.detections.size());
  }
  pr.gt = static_cast<long>(gts.size());
  const auto matched = oracle_gt_all(frames, gts, matcher);
  pr.matched = static_cast<long>(matched.size());
  pr.precision = pr.dets > 0
                     ? static_cast<double>(pr.matched) / pr.dets
                     : 1.0;
  pr.recall = pr.gt > 0 ? static_cast<double>(pr.matched) / pr.gt : 1.0;
  return pr;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "# tracking evaluation\n";
  out << "# mota = 1 - (fp + fn + ids) / gt\n";
  out << "# motp = mean(1 - overlap) over matched pairs\n";
  out << "# motar = max(0, 1 - (ids + fp + fn - (1 - r) * gt) / (r * gt)) "
         "at achieved recall r\n";
  out << "# amota, amotp = means over the recall sweep; a recall target "
         "without enough true positives scores motar 0, motp 1\n";
  out << "# id switch taxonomy: wrong_association when the previous track is "
         "matched to another object on the switch frame, early_termination "
         "otherwise\n";
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  const auto emit = [&](const ClassReport& r) {
    out << "class " << r.class_label << "\n";
    out << "  gt " << r.gt << "\n";
    out << "  matches " << r.matches << "\n";
    out << "  fp " << r.fp << "\n";
    out << "  fn " << r.fn << "\n";
    out << "  ids " << r.ids << "\n";
    out << "  ids_wrong_association " << r.ids_wrong_association << "\n";
    out << "  ids_early_termination " << r.ids_early_termination << "\n";
    out << "  mota " << num(r.mota) << "\n";
    out << "  motp " << num(r.motp) << "\n";
    out << "  ids_pct " << num(r.ids_pct) << "\n";
    out << "  fp_rate " << num(r.fp_rate) << "\n";
    out << "  fn_rate " << num(r.fn_rate) << "\n";
    out << "  recall " << num(r.recall) << "\n";
    if (r.amota) out << "  amota " << num(*r.amota) << "\n";
    if (r.amotp) out << "  amotp " << num(*r.amotp) << "\n";
    for (const auto& pt : r.amota_points) {
      out << "  amota_point target " << num(pt.target_recall);
      if (pt.achieved) {
        out << " threshold " << num(pt.threshold) << " recall "
            << num(pt.achieved_recall) << " motar " << num(pt.motar)
            << " motp " << num(pt.motp) << "\n";
      } else {
        out << " unachieved motar 0.000000 motp 1.000000\n";
      }
    }
  };
  for (const auto& r : report.per_class) emit(r);
  emit(report.all);
  return out.str();
}

}  // namespace simpletrack::metrics
