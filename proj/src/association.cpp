#include "simpletrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "simpletrack/geometry.hpp"

namespace simpletrack::association {

namespace {

// Far above any canonical gated cost, far below inf arithmetic trouble.
constexpr double kSentinel = 1e6;

double pair_cost(const BBox3D& pred, const Detection& det,
                 const AssociationMetric& metric,
                 const motion::KalmanState* state,
                 const motion::KalmanParams& params) {
  switch (metric.kind) {
    case MetricKind::IoU3D: {
      const double v = geometry::iou_3d(pred, det.box);
      return v > metric.gate ? 1.0 - v : CostMatrix::kInfeasible;
    }
    case MetricKind::GIoU3D: {
      const double v = geometry::giou_3d(pred, det.box);
      return v > metric.gate ? 1.0 - v : CostMatrix::kInfeasible;
    }
    case MetricKind::L2Bev: {
      const double v = geometry::bev_center_distance(pred, det.box);
      return v <= metric.gate ? v : CostMatrix::kInfeasible;
    }
    case MetricKind::Mahalanobis: {
      const double v = motion::mahalanobis_distance(*state, det, params);
      return v <= metric.gate ? v : CostMatrix::kInfeasible;
    }
  }
  return CostMatrix::kInfeasible;
}

// Kuhn-Munkres with potentials on a square matrix, 1-indexed internals.
// Returns col index assigned to each row.
std::vector<int> solve_square(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

void fill_unmatched(const CostMatrix& costs, MatchResult& result) {
  std::vector<char> row_used(costs.rows, 0), col_used(costs.cols, 0);
  for (const auto& [r, c] : result.matches) {
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (int r = 0; r < costs.rows; ++r) {
    if (!row_used[r]) result.unmatched_rows.push_back(r);
  }
  for (int c = 0; c < costs.cols; ++c) {
    if (!col_used[c]) result.unmatched_cols.push_back(c);
  }
}

}  // namespace

CostMatrix build_cost_matrix(const std::vector<BBox3D>& preds,
                             const std::vector<Detection>& dets,
                             const AssociationMetric& metric,
                             const std::vector<const motion::KalmanState*>&
                                 states,
                             const motion::KalmanParams& params) {
  if (metric.kind == MetricKind::Mahalanobis &&
      states.size() != preds.size()) {
    throw std::invalid_argument(
        "Mahalanobis association requires one KalmanState per prediction");
  }
  CostMatrix costs(static_cast<int>(preds.size()),
                   static_cast<int>(dets.size()));
  for (int r = 0; r < costs.rows; ++r) {
    const motion::KalmanState* state =
        states.empty() ? nullptr : states[static_cast<size_t>(r)];
    for (int c = 0; c < costs.cols; ++c) {
      costs.at(r, c) =
          pair_cost(preds[static_cast<size_t>(r)],
                    dets[static_cast<size_t>(c)], metric, state, params);
    }
  }
  return costs;
}

MatchResult hungarian_match(const CostMatrix& costs) {
  MatchResult result;
  if (costs.rows == 0 || costs.cols == 0) {
    fill_unmatched(costs, result);
    return result;
  }
  const int n = std::max(costs.rows, costs.cols);
  std::vector<std::vector<double>> a(n, std::vector<double>(n, kSentinel));
  for (int r = 0; r < costs.rows; ++r) {
    for (int c = 0; c < costs.cols; ++c) {
      if (costs.feasible(r, c)) a[r][c] = costs.at(r, c);
    }
  }
  const std::vector<int> row_to_col = solve_square(a);
  for (int r = 0; r < costs.rows; ++r) {
    const int c = row_to_col[r];
    if (c >= 0 && c < costs.cols && costs.feasible(r, c)) {
      result.matches.emplace_back(r, c);
    }
  }
  fill_unmatched(costs, result);
  return result;
}

MatchResult greedy_match(const CostMatrix& costs) {
  struct Entry {
    double cost;
    int r, c;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(costs.rows) * costs.cols);
  for (int r = 0; r < costs.rows; ++r) {
    for (int c = 0; c < costs.cols; ++c) {
      if (costs.feasible(r, c)) entries.push_back({costs.at(r, c), r, c});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.r != b.r) return a.r < b.r;
    return a.c < b.c;
  });
  MatchResult result;
  std::vector<char> row_used(costs.rows, 0), col_used(costs.cols, 0);
  for (const Entry& e : entries) {
    if (row_used[e.r] || col_used[e.c]) continue;
    row_used[e.r] = 1;
    col_used[e.c] = 1;
    result.matches.emplace_back(e.r, e.c);
  }
  std::sort(result.matches.begin(), result.matches.end());
  fill_unmatched(costs, result);
  return result;
}

}  // namespace simpletrack::association
