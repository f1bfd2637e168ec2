#include "doctest.h"
#include "simpletrack/config.hpp"
#include "simpletrack/sim.hpp"
#include "simpletrack/tracker.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace simpletrack;
using namespace simpletrack::tracker;

namespace {

Detection det(double cx, double cy, double score,
              const std::string& cls = "vehicle") {
  return Detection{make_box(cx, cy, 0.85, 4.5, 2.0, 1.7, 0.0), score, cls, {}};
}

Frame frame_of(std::int64_t index, std::vector<Detection> dets,
               const std::string& seq = "s0") {
  Frame f;
  f.sequence_id = seq;
  f.frame_index = index;
  f.timestamp = 0.1 * static_cast<double>(index);
  f.detections = std::move(dets);
  return f;
}

bool same_record(const TrackRecord& a, const TrackRecord& b) {
  return a.sequence_id == b.sequence_id && a.frame_index == b.frame_index &&
         a.track_id == b.track_id && a.class_label == b.class_label &&
         a.score == b.score && a.source == b.source && a.box.cx == b.box.cx &&
         a.box.cy == b.box.cy && a.box.cz == b.box.cz &&
         a.box.length == b.box.length && a.box.width == b.box.width &&
         a.box.height == b.box.height && a.box.yaw == b.box.yaw;
}

bool same_stream(const TrackStream& a, const TrackStream& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!same_record(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("preprocess") {
  TrackerConfig cfg;  // defaults: nms 0.25, t_low 0.1

  SUBCASE("empty frame") {
    CHECK(preprocess(frame_of(0, {}), cfg).empty());
  }

  SUBCASE("suppresses overlapping duplicates, keeps the top score") {
    const auto out =
        preprocess(frame_of(0, {det(0, 0, 0.6), det(0.2, 0, 0.9)}), cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].score == 0.9);
  }

  SUBCASE("drops scores below t_low before anything else") {
    const auto out =
        preprocess(frame_of(0, {det(0, 0, 0.05), det(30, 0, 0.8)}), cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box.cx == 30.0);
  }

  SUBCASE("nms never crosses classes") {
    const auto out = preprocess(
        frame_of(0, {det(0, 0, 0.9, "vehicle"), det(0, 0, 0.8, "pedestrian")}),
        cfg);
    CHECK(out.size() == 2);
  }

  SUBCASE("non-finite fields are rejected") {
    auto bad = det(0, 0, 0.9);
    bad.box.cx = std::nan("");
    CHECK_THROWS_AS(preprocess(frame_of(0, {bad}), cfg), MalformedDetection);

    auto bad_vel = det(0, 0, 0.9);
    bad_vel.velocity = Vec2{std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(preprocess(frame_of(0, {bad_vel}), cfg),
                    MalformedDetection);
  }

  SUBCASE("ego pose moves boxes and velocities into the world frame") {
    Frame f = frame_of(0, {det(1, 0, 0.9)});
    f.detections[0].velocity = Vec2{1.0, 0.0};
    EgoPose pose;  // rotate +90 degrees, translate (10, 20)
    pose.m = {0, -1, 0, 10, 1, 0, 0, 20, 0, 0, 1, 0, 0, 0, 0, 1};
    f.ego_pose = pose;

    const auto world = preprocess(f, cfg);
    REQUIRE(world.size() == 1);
    CHECK(world[0].box.cx == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(world[0].box.cy == doctest::Approx(21.0).epsilon(1e-12));
    CHECK(world[0].box.yaw == doctest::Approx(M_PI / 2).epsilon(1e-12));
    REQUIRE(world[0].velocity.has_value());
    CHECK(world[0].velocity->x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(world[0].velocity->y == doctest::Approx(1.0).epsilon(1e-12));

    TrackerConfig ego_cfg = cfg;
    ego_cfg.world_frame = false;
    const auto local = preprocess(f, ego_cfg);
    REQUIRE(local.size() == 1);
    CHECK(local[0].box.cx == 1.0);
    CHECK(local[0].box.yaw == 0.0);
    CHECK(local[0].velocity->x == 1.0);
  }
}

TEST_CASE("frame sequencing contracts") {
  TrackerConfig cfg;
  Tracker t(cfg);
  t.process_frame(frame_of(0, {det(0, 0, 0.9)}));

  SUBCASE("repeated index") {
    CHECK_THROWS_AS(t.process_frame(frame_of(0, {})), OutOfOrderFrame);
  }
  SUBCASE("decreasing index") {
    CHECK_THROWS_AS(t.process_frame(frame_of(-3, {})), OutOfOrderFrame);
  }
  SUBCASE("sequence mixing") {
    CHECK_THROWS_AS(t.process_frame(frame_of(1, {}, "other")),
                    std::invalid_argument);
  }
}

TEST_CASE("confirmation delays output by min_hits") {
  TrackerConfig cfg;
  cfg.defaults.lifecycle.min_hits = 3;
  cfg.defaults.lifecycle.output_score = 0.0;
  Tracker t(cfg);

  CHECK(t.process_frame(frame_of(0, {det(0, 0, 0.9)})).empty());
  CHECK(t.process_frame(frame_of(1, {det(0, 0, 0.9)})).empty());
  const auto out = t.process_frame(frame_of(2, {det(0, 0, 0.9)}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].track_id == 1);
  CHECK(out[0].frame_index == 2);
}

TEST_CASE("constant-velocity model reports raw detections under one id") {
  TrackerConfig cfg;
  cfg.defaults.motion = motion::MotionModelKind::ConstantVelocity;
  cfg.defaults.lifecycle.min_hits = 3;
  cfg.defaults.lifecycle.output_score = 0.0;

  Tracker t(cfg);
  TrackStream all;
  std::vector<BBox3D> inputs;
  for (int f = 0; f < 50; ++f) {
    Detection d = det(0.12 * f, -0.08 * f, 0.9);
    d.velocity = Vec2{0.12, -0.08};
    inputs.push_back(d.box);
    auto recs = t.process_frame(frame_of(f, {d}));
    all.insert(all.end(), recs.begin(), recs.end());
  }
  REQUIRE(all.size() == 48);  // confirmed from frame 2 on
  for (const auto& r : all) {
    CHECK(r.track_id == 1);
    const auto& in = inputs[static_cast<size_t>(r.frame_index)];
    CHECK(r.box.cx == in.cx);  // detection reported verbatim
    CHECK(r.box.cy == in.cy);
    CHECK(r.source == lifecycle::FrameSource::Detection);
  }
}

TEST_CASE("kalman predict-only outputs the raw detection boxes") {
  TrackerConfig cfg;
  cfg.defaults.motion = motion::MotionModelKind::KalmanPredictOnly;
  cfg.defaults.lifecycle.min_hits = 1;
  cfg.defaults.lifecycle.output_score = 0.0;

  sim::Rng rng(5);
  Tracker t(cfg);
  for (int f = 0; f < 20; ++f) {
    const Detection d = det(0.3 * f + rng.normal(0, 0.1),
                            rng.normal(0, 0.1), 0.9);
    const auto out = t.process_frame(frame_of(f, {d}));
    REQUIRE(out.size() == 1);
    CHECK(out[0].box.cx == d.box.cx);  // bitwise: no smoothing applied
    CHECK(out[0].box.cy == d.box.cy);
    CHECK(out[0].box.yaw == d.box.yaw);
  }
}

TEST_CASE("disjoint objects get distinct ids") {
  TrackerConfig cfg;
  cfg.defaults.lifecycle.min_hits = 1;
  cfg.defaults.lifecycle.output_score = 0.0;
  Tracker t(cfg);

  std::set<int> ids;
  for (int f = 0; f < 5; ++f) {
    const auto out =
        t.process_frame(frame_of(f, {det(0, 0, 0.9), det(30, 0, 0.9)}));
    REQUIRE(out.size() == 2);
    for (const auto& r : out) ids.insert(r.track_id);
  }
  CHECK(ids == std::set<int>{1, 2});
}

TEST_CASE("non-evaluation frames are processed but never emit") {
  TrackerConfig cfg;
  cfg.defaults.lifecycle.min_hits = 3;
  cfg.defaults.lifecycle.output_score = 0.0;

  auto make = [&](int f, bool eval) {
    Frame fr = frame_of(f, {det(0.5 * f, 0, 0.9)});
    fr.is_evaluation_frame = eval;
    return fr;
  };

  // High-frequency stream: every frame tracked, every 5th evaluated.
  Tracker hf(cfg);
  TrackStream hf_out;
  for (int f = 0; f < 20; ++f) {
    auto recs = hf.process_frame(make(f, f % 5 == 0));
    hf_out.insert(hf_out.end(), recs.begin(), recs.end());
  }
  for (const auto& r : hf_out) CHECK(r.frame_index % 5 == 0);
  // Hits accrued on skipped frames: confirmed well before frame 5.
  REQUIRE(hf_out.size() == 3);  // frames 5, 10, 15 (frame 0 still tentative)

  // Evaluation-only stream: the same frames but nothing in between.
  Tracker lo(cfg);
  TrackStream lo_out;
  for (int f = 0; f < 20; f += 5) {
    auto recs = lo.process_frame(make(f, true));
    lo_out.insert(lo_out.end(), recs.begin(), recs.end());
  }
  REQUIRE(lo_out.size() == 2);  // confirmation needs three sightings

  // The intermediate frames changed the filter state, not just the counts.
  const auto& hf15 = hf_out.back();
  const auto& lo15 = lo_out.back();
  REQUIRE(hf15.frame_index == 15);
  REQUIRE(lo15.frame_index == 15);
  CHECK(hf15.box.cx != lo15.box.cx);
}

TEST_CASE("runs are deterministic and thread-count independent") {
  sim::Scenario sc;
  sc.sequences = 8;
  sc.frames = 25;
  sc.objects = 6;
  sc.clutter_rate = 0.3;
  sc.dropout = 0.05;
  sc.score_dip_fraction = 0.2;
  sc.score_dip_rate = 0.1;
  const auto data = sim::generate(sc, 11);

  const auto cfg = config::profile("desk");
  const auto a = process_sequences(data.sequences, cfg, 1);
  const auto b = process_sequences(data.sequences, cfg, 4);
  const auto c = process_sequences(data.sequences, cfg, 4);
  CHECK(!a.empty());
  CHECK(same_stream(a, b));
  CHECK(same_stream(b, c));
}

TEST_CASE("truncating the input preserves the emitted prefix") {
  sim::Scenario sc;
  sc.frames = 30;
  sc.objects = 5;
  sc.dropout = 0.1;
  sc.score_dip_fraction = 0.3;
  sc.score_dip_rate = 0.1;
  const auto data = sim::generate(sc, 3);
  REQUIRE(data.sequences.size() == 1);

  const auto cfg = config::profile("desk");
  const auto full = process_sequence(data.sequences[0], cfg);

  std::vector<Frame> head(data.sequences[0].begin(),
                          data.sequences[0].begin() + 20);
  const auto part = process_sequence(head, cfg);

  TrackStream full_prefix;
  for (const auto& r : full) {
    if (r.frame_index < 20) full_prefix.push_back(r);
  }
  CHECK(same_stream(full_prefix, part));
}

TEST_CASE("empty low band makes two-stage equal one-stage") {
  sim::Scenario sc;
  sc.frames = 40;
  sc.objects = 8;
  sc.clutter_rate = 0.5;  // clutter scores start at 0.5, at the threshold
  sc.dropout = 0.1;
  const auto data = sim::generate(sc, 21);

  TrackerConfig two = config::profile("desk");  // t_high 0.5
  two.defaults.lifecycle.t_low = 0.1;
  TrackerConfig one = config::profile("desk");
  one.defaults.lifecycle.t_low = 0.5;

  // Score distribution leaves [0.1, 0.5) empty, so the stages coincide.
  const auto a = process_sequences(data.sequences, two, 1);
  const auto b = process_sequences(data.sequences, one, 1);
  CHECK(!a.empty());
  CHECK(same_stream(a, b));
}

TEST_CASE("configuration validation") {
  SUBCASE("nms_iou range") {
    TrackerConfig c;
    c.defaults.nms_iou = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("threshold ordering") {
    TrackerConfig c;
    c.defaults.lifecycle.t_low = 0.6;
    c.defaults.lifecycle.t_high = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("min_hits at least one") {
    TrackerConfig c;
    c.defaults.lifecycle.min_hits = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("mahalanobis needs a kalman state") {
    TrackerConfig c;
    c.defaults.metric.kind = association::MetricKind::Mahalanobis;
    c.defaults.metric.gate = 11.0;
    c.defaults.motion = motion::MotionModelKind::ConstantVelocity;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("per-class overrides are validated too") {
    TrackerConfig c;
    c.per_class["pedestrian"] = c.defaults;
    c.per_class["pedestrian"].lifecycle.output_score = 2.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("constructor validates") {
    TrackerConfig c;
    c.defaults.kalman.observation_noise = 0.0;
    CHECK_THROWS_AS(Tracker{c}, ConfigError);
  }
}
