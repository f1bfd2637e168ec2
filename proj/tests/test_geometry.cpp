#include "doctest.h"
#include "oracles.hpp"
#include "simpletrack/geometry.hpp"
#include "simpletrack/sim.hpp"

#include <cmath>

using namespace simpletrack;
using geometry::bev_intersection_area;
using geometry::giou_3d;
using geometry::iou_3d;

namespace {

BBox3D random_box(sim::Rng& rng) {
  return make_box(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                  rng.uniform(-3.0, 3.0), rng.uniform(0.5, 4.0),
                  rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                  rng.uniform(-M_PI, M_PI));
}

}  // namespace

TEST_CASE("iou3d hand cases") {
  const BBox3D unit = make_box(0, 0, 0, 1, 1, 1, 0);
  CHECK(iou_3d(unit, unit) == doctest::Approx(1.0).epsilon(1e-12));

  const BBox3D far = make_box(10, 0, 0, 1, 1, 1, 0);
  CHECK(iou_3d(unit, far) == 0.0);

  // Offset by half the extent: I = 0.5, U = 1.5.
  const BBox3D shifted = make_box(0.5, 0, 0, 1, 1, 1, 0);
  CHECK(iou_3d(unit, shifted) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Vertically disjoint boxes overlap in BEV but not in 3D.
  const BBox3D above = make_box(0, 0, 5, 1, 1, 1, 0);
  CHECK(iou_3d(unit, above) == 0.0);
}

TEST_CASE("iou3d offset case agrees with Monte-Carlo volume") {
  const BBox3D a = make_box(0, 0, 0, 1, 1, 1, 0);
  const BBox3D b = make_box(0.5, 0, 0, 1, 1, 1, 0);
  const auto qa = oracle::obb_corners(a);
  const auto qb = oracle::obb_corners(b);
  const std::vector<Vec2> ha(qa.begin(), qa.end());
  const std::vector<Vec2> hb(qb.begin(), qb.end());

  // Sample the union AABB, count points inside both footprints (z overlap is
  // the full unit here).
  sim::Rng rng(27);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p{rng.uniform(-0.5, 1.0), rng.uniform(-0.5, 0.5)};
    if (oracle::point_in_convex(ha, p) && oracle::point_in_convex(hb, p)) ++hits;
  }
  const double box_area = 1.5 * 1.0;
  const double est = box_area * hits / n;          // intersection volume
  const double frac = static_cast<double>(hits) / n;
  const double sigma = box_area * std::sqrt(frac * (1.0 - frac) / n);
  CHECK(std::abs(est - 0.5) <= 3.0 * sigma + 1e-12);
}

TEST_CASE("giou3d hand cases") {
  const BBox3D unit = make_box(0, 0, 0, 1, 1, 1, 0);
  CHECK(giou_3d(unit, unit) == doctest::Approx(1.0).epsilon(1e-12));

  // I = 0, U = 2, enclosing hull 11 x 1 x 1.
  const BBox3D far = make_box(10, 0, 0, 1, 1, 1, 0);
  CHECK(giou_3d(unit, far) == doctest::Approx(-9.0 / 11.0).epsilon(1e-9));

  // Concentric 2^3 and 1^3: I = 1, U = 8, C = 8.
  const BBox3D big = make_box(0, 0, 0, 2, 2, 2, 0);
  CHECK(giou_3d(big, unit) == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("giou3d far case agrees with Monte-Carlo hull volume") {
  const BBox3D a = make_box(0, 0, 0, 1, 1, 1, 0);
  const BBox3D b = make_box(10, 0, 0, 1, 1, 1, 0);
  const auto hull = oracle::giftwrap_hull([&] {
    const auto qa = oracle::obb_corners(a);
    const auto qb = oracle::obb_corners(b);
    std::vector<Vec2> pts(qa.begin(), qa.end());
    pts.insert(pts.end(), qb.begin(), qb.end());
    return pts;
  }());
  sim::Rng rng(31);
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p{rng.uniform(-0.5, 10.5), rng.uniform(-0.5, 0.5)};
    if (oracle::point_in_convex(hull, p)) ++hits;
  }
  const double vc = 11.0 * 1.0 * hits / n;  // sampled hull area x unit height
  const double vu = 2.0;
  const double giou_mc = 0.0 / vu - (vc - vu) / vc;
  CHECK(giou_3d(a, b) == doctest::Approx(giou_mc).epsilon(1e-2));
}

TEST_CASE("random rotated pairs match the rasterization oracle") {
  sim::Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    const BBox3D a = random_box(rng);
    const BBox3D b = random_box(rng);
    const double inter = bev_intersection_area(a, b);
    const double ref = oracle::raster_bev_intersection(a, b, 2e-4);
    const double smaller = std::min(a.length * a.width, b.length * b.width);
    CHECK(std::abs(inter - ref) <= 0.005 * smaller);
    CHECK(std::abs(iou_3d(a, b) - oracle::raster_iou3d(a, b, 2e-4)) <= 1e-2);
    CHECK(std::abs(giou_3d(a, b) - oracle::raster_giou3d(a, b, 2e-4)) <= 1e-2);
  }
}

TEST_CASE("iou and giou symmetry and rigid invariance") {
  sim::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const BBox3D a = random_box(rng);
    const BBox3D b = random_box(rng);
    CHECK(iou_3d(a, b) == doctest::Approx(iou_3d(b, a)).epsilon(1e-12));
    CHECK(giou_3d(a, b) == doctest::Approx(giou_3d(b, a)).epsilon(1e-12));
    CHECK(giou_3d(a, b) <= iou_3d(a, b) + 1e-12);

    // Same rigid transform applied to both boxes.
    const double dx = rng.uniform(-5, 5), dy = rng.uniform(-5, 5);
    const double rot = rng.uniform(-M_PI, M_PI);
    const double c = std::cos(rot), s = std::sin(rot);
    auto moved = [&](const BBox3D& in) {
      return make_box(c * in.cx - s * in.cy + dx, s * in.cx + c * in.cy + dy,
                      in.cz, in.length, in.width, in.height, in.yaw + rot);
    };
    CHECK(iou_3d(moved(a), moved(b)) == doctest::Approx(iou_3d(a, b)).epsilon(1e-9));
    CHECK(giou_3d(moved(a), moved(b)) == doctest::Approx(giou_3d(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("giou decreases toward -1 with separation") {
  const BBox3D base = make_box(0, 0, 0, 2, 1, 1, 0.3);
  double prev = 1.0;
  for (double d = 0.0; d <= 200.0; d += 5.0) {
    const BBox3D far = make_box(d, 0, 0, 2, 1, 1, 0.3);
    const double g = giou_3d(base, far);
    CHECK(g <= prev + 1e-12);
    CHECK(g > -1.0);
    prev = g;
  }
  CHECK(prev < -0.95);
}

TEST_CASE("bev center distance") {
  const BBox3D a = make_box(0, 0, 0, 1, 1, 1, 0);
  CHECK(geometry::bev_center_distance(a, a) == 0.0);
  const BBox3D b = make_box(3, 4, 0, 1, 1, 1, 0);
  CHECK(geometry::bev_center_distance(a, b) == doctest::Approx(5.0).epsilon(1e-12));
  const BBox3D c = make_box(1.5, -2, 0, 1, 1, 1, 0);
  const BBox3D d = make_box(-1, 2, 0, 1, 1, 1, 0);
  CHECK(geometry::bev_center_distance(c, d) == doctest::Approx(4.717).epsilon(1e-3));
}

TEST_CASE("polygon helpers against the gift-wrap oracle") {
  // Unit square.
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(geometry::polygon_area(square) == doctest::Approx(1.0).epsilon(1e-12));

  // Clip two offset squares -> 0.25.
  const std::vector<Vec2> shifted = {{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}};
  const auto clipped = geometry::convex_clip(square, shifted);
  CHECK(geometry::polygon_area(clipped.vertices) == doctest::Approx(0.25).epsilon(1e-12));

  // Hull of random corner clouds: monotone chain vs gift wrapping.
  sim::Rng rng(55);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec2> pts;
    for (int k = 0; k < 10; ++k) {
      pts.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4)});
    }
    const auto hull = geometry::convex_hull(pts);
    CHECK(geometry::polygon_area(hull.vertices) ==
          doctest::Approx(oracle::polygon_area_shoelace(oracle::giftwrap_hull(pts)))
              .epsilon(1e-9));
  }
}

TEST_CASE("nms hand cases") {
  auto det = [](double x, double score) {
    return Detection{make_box(x, 0, 0, 1, 1, 1, 0), score, "vehicle", {}};
  };

  SUBCASE("duplicate boxes keep the top score") {
    const auto out = geometry::nms({det(0, 0.9), det(0, 0.8)}, 0.25);
    REQUIRE(out.size() == 1);
    CHECK(out[0].score == 0.9);
  }
  SUBCASE("disjoint boxes both survive") {
    const auto out = geometry::nms({det(0, 0.9), det(5, 0.2)}, 0.25);
    CHECK(out.size() == 2);
  }
  SUBCASE("colinear chain: middle box suppressed") {
    // IoU(0, 0.4) = IoU(0.4, 0.8) = 0.6/1.4, IoU(0, 0.8) = 0.2/1.8.
    const auto out = geometry::nms({det(0, 0.9), det(0.4, 0.8), det(0.8, 0.7)}, 0.25);
    REQUIRE(out.size() == 2);
    CHECK(out[0].score == 0.9);
    CHECK(out[1].score == 0.7);
  }
  SUBCASE("empty input") { CHECK(geometry::nms({}, 0.25).empty()); }
  SUBCASE("equal scores: earlier input wins") {
    auto a = det(0, 0.5);
    a.class_label = "first";  // tag without touching the geometry
    const auto out = geometry::nms({a, det(0, 0.5)}, 0.25);
    REQUIRE(out.size() == 1);
    CHECK(out[0].class_label == "first");
  }
}

TEST_CASE("nms output properties on random clusters") {
  sim::Rng rng(91);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Detection> dets;
    for (int i = 0; i < 20; ++i) {
      dets.push_back({make_box(rng.uniform(-6, 6), rng.uniform(-6, 6), 0,
                               rng.uniform(1, 3), rng.uniform(1, 3),
                               rng.uniform(1, 3), rng.uniform(-M_PI, M_PI)),
                      rng.uniform(0.1, 1.0), "vehicle", {}});
    }
    const double thr = rng.uniform(0.1, 0.5);
    const auto out = geometry::nms(dets, thr);

    // Subset of the input, score-sorted, pairwise IoU at or below threshold.
    CHECK(out.size() <= dets.size());
    for (size_t i = 0; i < out.size(); ++i) {
      if (i > 0) CHECK(out[i - 1].score >= out[i].score);
      for (size_t j = i + 1; j < out.size(); ++j) {
        CHECK(iou_3d(out[i].box, out[j].box) <= thr + 1e-12);
      }
    }
  }
}
