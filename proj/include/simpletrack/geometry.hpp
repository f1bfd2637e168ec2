#pragma once

#include <vector>

#include "simpletrack/types.hpp"

namespace simpletrack::geometry {

/// Convex polygon in the ground plane, vertices counter-clockwise.
struct BevPolygon {
  std::vector<Vec2> vertices;
};

/// Signed area (positive for CCW ordering).
double polygon_area(const std::vector<Vec2>& vertices);

/// The 4 corners of the box footprint, counter-clockwise.
std::array<Vec2, 4> bev_corners(const BBox3D& box);

/// Intersection of two convex polygons (Sutherland-Hodgman clipping).
/// Degenerate results (< 3 vertices) come back empty.
BevPolygon convex_clip(const std::vector<Vec2>& subject,
                       const std::vector<Vec2>& clip);

/// Convex hull of a point set (monotone chain), CCW, collinear points dropped.
BevPolygon convex_hull(std::vector<Vec2> points);

/// Overlap area of the two box footprints.
double bev_intersection_area(const BBox3D& a, const BBox3D& b);

/// Overlap of the vertical extents, >= 0.
double vertical_overlap(const BBox3D& a, const BBox3D& b);

/// Volume IoU of two oriented boxes, in [0, 1].
double iou_3d(const BBox3D& a, const BBox3D& b);

/// Generalized IoU in (-1, 1]. The enclosing volume is the convex hull of
/// the footprints extruded over the joint vertical span; this is exact when
/// the boxes share a vertical span and an approximation otherwise.
double giou_3d(const BBox3D& a, const BBox3D& b);

/// Euclidean distance between the ground-plane centers.
double bev_center_distance(const BBox3D& a, const BBox3D& b);

/// Greedy non-maximum suppression over one frame and class. Detections are
/// taken in descending score order (ties keep input order); a detection
/// survives iff its IoU with every already-kept detection is <= threshold.
std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold);

}  // namespace simpletrack::geometry
