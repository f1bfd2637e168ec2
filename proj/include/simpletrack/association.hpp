#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "simpletrack/motion.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::association {

enum class MetricKind { IoU3D, GIoU3D, L2Bev, Mahalanobis };

/// IoU/GIoU are similarities (larger is better, gate is exclusive ">");
/// L2/Mahalanobis are distances (smaller is better, gate is inclusive "<=").
inline bool is_similarity(MetricKind kind) {
  return kind == MetricKind::IoU3D || kind == MetricKind::GIoU3D;
}

inline double default_gate(MetricKind kind) {
  switch (kind) {
    case MetricKind::IoU3D: return 0.1;
    case MetricKind::GIoU3D: return -0.5;
    case MetricKind::L2Bev: return 5.0;
    case MetricKind::Mahalanobis: return 11.0;
  }
  return 0.0;
}

struct AssociationMetric {
  MetricKind kind = MetricKind::GIoU3D;
  double gate = -0.5;
};

enum class MatchStrategy { Hungarian, Greedy };

/// Gated pairwise costs, rows = tracklet predictions, cols = detections.
/// Canonical costs are nonnegative: 1 - iou, 1 - giou, or the raw distance.
/// Pairs failing the gate hold kInfeasible.
struct CostMatrix {
  static constexpr double kInfeasible =
      std::numeric_limits<double>::infinity();

  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major, rows * cols

  CostMatrix() = default;
  CostMatrix(int r, int c)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, kInfeasible) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  bool feasible(int r, int c) const { return std::isfinite(at(r, c)); }
};

struct MatchResult {
  std::vector<std::pair<int, int>> matches;  // (row, col)
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;

  double total_cost(const CostMatrix& costs) const {
    double t = 0.0;
    for (const auto& [r, c] : matches) t += costs.at(r, c);
    return t;
  }
};

/// Build the gated cost matrix for tracklet predictions vs detections.
/// `states` may be empty unless the metric is Mahalanobis, in which case one
/// KalmanState per prediction is required.
CostMatrix build_cost_matrix(const std::vector<BBox3D>& preds,
                             const std::vector<Detection>& dets,
                             const AssociationMetric& metric,
                             const std::vector<const motion::KalmanState*>&
                                 states = {},
                             const motion::KalmanParams& params = {});

/// Minimum-total-cost assignment over the feasible entries; maximizes the
/// number of pairs, then minimizes cost (large-sentinel padding, sentinel
/// matches stripped).
MatchResult hungarian_match(const CostMatrix& costs);

/// Repeatedly takes the globally smallest feasible cost among unmatched
/// rows/cols; ties break by (row, col) order.
MatchResult greedy_match(const CostMatrix& costs);

}  // namespace simpletrack::association
