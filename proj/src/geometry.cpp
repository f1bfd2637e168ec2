#include "simpletrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simpletrack::geometry {

namespace {

constexpr double kEdgeEps = 1e-9;  // on-edge classification for clipping

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double polygon_area(const std::vector<Vec2>& v) {
  const size_t n = v.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % n];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

std::array<Vec2, 4> bev_corners(const BBox3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  // local corners (+l,+w), (-l,+w), (-l,-w), (+l,-w): CCW
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Vec2{box.cx + c * lx[i] - s * ly[i],
                  box.cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

BevPolygon convex_clip(const std::vector<Vec2>& subject,
                       const std::vector<Vec2>& clip) {
  std::vector<Vec2> poly = subject;
  const size_t m = clip.size();
  for (size_t i = 0; i < m && !poly.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % m];
    std::vector<Vec2> next;
    next.reserve(poly.size() + 1);
    const size_t n = poly.size();
    for (size_t j = 0; j < n; ++j) {
      const Vec2& p = poly[j];
      const Vec2& q = poly[(j + 1) % n];
      const double dp = cross(a, b, p);
      const double dq = cross(a, b, q);
      const bool p_in = dp >= -kEdgeEps;
      const bool q_in = dq >= -kEdgeEps;
      if (p_in) next.push_back(p);
      if (p_in != q_in) {
        const double denom = dp - dq;
        if (std::fabs(denom) > kEdgeEps * kEdgeEps) {
          const double t = dp / denom;
          next.push_back(Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
      }
    }
    poly = std::move(next);
  }
  if (poly.size() < 3) return BevPolygon{};
  return BevPolygon{std::move(poly)};
}

BevPolygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  const size_t n = pts.size();
  if (n < 3) return BevPolygon{std::move(pts)};
  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return BevPolygon{std::move(hull)};
}

double bev_intersection_area(const BBox3D& a, const BBox3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const BevPolygon inter =
      convex_clip(std::vector<Vec2>(ca.begin(), ca.end()),
                  std::vector<Vec2>(cb.begin(), cb.end()));
  return std::max(0.0, polygon_area(inter.vertices));
}

double vertical_overlap(const BBox3D& a, const BBox3D& b) {
  return std::max(0.0, std::min(a.top(), b.top()) -
                           std::max(a.bottom(), b.bottom()));
}

double iou_3d(const BBox3D& a, const BBox3D& b) {
  const double vi = bev_intersection_area(a, b) * vertical_overlap(a, b);
  if (vi <= 0.0) return 0.0;
  const double vu = a.volume() + b.volume() - vi;
  return std::clamp(vi / vu, 0.0, 1.0);
}

double giou_3d(const BBox3D& a, const BBox3D& b) {
  const double vi = bev_intersection_area(a, b) * vertical_overlap(a, b);
  const double vu = a.volume() + b.volume() - vi;

  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  std::vector<Vec2> pts(ca.begin(), ca.end());
  pts.insert(pts.end(), cb.begin(), cb.end());
  const double hull_area = polygon_area(convex_hull(std::move(pts)).vertices);
  const double span = std::max(a.top(), b.top()) - std::min(a.bottom(), b.bottom());
  const double vc = hull_area * span;
  if (vc <= 0.0) return 1.0;  // degenerate: identical zero-extent hulls
  return vi / vu - (vc - vu) / vc;
}

double bev_center_distance(const BBox3D& a, const BBox3D& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return dets[i].score > dets[j].score;
  });
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (size_t idx : order) {
    const Detection& d = dets[idx];
    bool keep = true;
    for (const Detection& k : kept) {
      if (iou_3d(d.box, k.box) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(d);
  }
  return kept;
}

}  // namespace simpletrack::geometry
