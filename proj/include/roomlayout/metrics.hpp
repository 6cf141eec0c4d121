#pragma once

// Benchmark metrics: pixel error (PE) and keypoint error (KPE), both in
// percent, and their unweighted means over a dataset.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

struct Assignment {
  std::vector<int> row_to_col;  // -1 when a row is unassigned
  double cost = 0.0;
};

/// Minimum-cost assignment on a rows x cols cost matrix (Kuhn-Munkres with
/// potentials). Every row is assigned when rows <= cols and vice versa.
inline Assignment min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  Assignment out;
  const std::size_t rows = cost.size();
  if (rows == 0) return out;
  const std::size_t cols = cost.front().size();
  const bool transpose = rows > cols;
  const std::size_t n = transpose ? cols : rows;
  const std::size_t m = transpose ? rows : cols;
  auto c = [&](std::size_t i, std::size_t j) { return transpose ? cost[j][i] : cost[i][j]; };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.row_to_col.assign(rows, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t i = p[j] - 1, col = j - 1;
    if (transpose) out.row_to_col[col] = static_cast<int>(i);
    else out.row_to_col[i] = static_cast<int>(col);
  }
  for (std::size_t i = 0; i < rows; ++i)
    if (out.row_to_col[i] >= 0) out.cost += cost[i][static_cast<std::size_t>(out.row_to_col[i])];
  return out;
}

/// Percentage of non-void ground-truth pixels whose label differs. With
/// `wall_permutation_tolerant`, the minimum over the six relabelings of
/// the predicted walls is reported.
inline double pixel_error(const SegMask& pred, const SegMask& gt, bool wall_permutation_tolerant = false) {
  if (pred.size() != gt.size())
    throw ValidationError("mask size mismatch: " + to_string(pred.size()) + " vs " + to_string(gt.size()));
  // confusion[p][g] over label codes
  std::array<std::array<std::size_t, kLabelCount>, kLabelCount> confusion{};
  const auto& pc = pred.codes();
  const auto& gc = gt.codes();
  for (std::size_t i = 0; i < pc.size(); ++i)
    ++confusion[pc[i] < kLabelCount ? pc[i] : 0][gc[i] < kLabelCount ? gc[i] : 0];

  std::size_t valid = 0;
  for (std::size_t p = 0; p < kLabelCount; ++p)
    for (std::size_t g = 1; g < kLabelCount; ++g) valid += confusion[p][g];
  if (valid == 0) throw ValidationError("ground truth mask contains only void pixels");

  std::array<std::size_t, kLabelCount> relabel = {0, 1, 2, 3, 4, 5};
  std::array<std::size_t, 3> walls = {3, 4, 5};
  std::size_t best = std::numeric_limits<std::size_t>::max();
  do {
    relabel[3] = walls[0];
    relabel[4] = walls[1];
    relabel[5] = walls[2];
    std::size_t agree = 0;
    for (std::size_t p = 0; p < kLabelCount; ++p) {
      const std::size_t g = relabel[p];
      if (g != 0) agree += confusion[p][g];
    }
    best = std::min(best, valid - agree);
  } while (wall_permutation_tolerant && std::next_permutation(walls.begin(), walls.end()));
  return 100.0 * static_cast<double>(best) / static_cast<double>(valid);
}

/// Mean keypoint distance normalized by the image diagonal, in percent.
/// Sets of the same group are compared id to id; otherwise points are
/// paired by a minimum-cost matching. Every point left without a partner
/// costs 1, and each pair cost is capped at 1, so the result stays within
/// [0, 100].
inline double keypoint_error(const KeypointSet& pred, const KeypointSet& gt, ImageSize image_size) {
  if (image_size.empty()) throw ValidationError("image size must be positive");
  if (pred.points.empty() && gt.points.empty()) throw ValidationError("both keypoint sets are empty");
  auto to_frame = [&](const KeypointSet& k) {
    return (k.frame.empty() || k.frame == image_size) ? k : rescale_keypoints(k, image_size);
  };
  const KeypointSet p = to_frame(pred);
  const KeypointSet g = to_frame(gt);
  const double diag = image_size.diagonal();
  auto dist = [diag](const Keypoint& a, const Keypoint& b) {
    return std::min(1.0, std::hypot(a.x - b.x, a.y - b.y) / diag);
  };

  const std::size_t larger = std::max(p.points.size(), g.points.size());
  double total = 0.0;
  std::size_t paired = 0;
  if (p.group == g.group) {
    for (const auto& kp : p.points) {
      if (const Keypoint* kg = g.find(kp.id)) {
        total += dist(kp, *kg);
        ++paired;
      }
    }
  } else if (!p.points.empty() && !g.points.empty()) {
    std::vector<std::vector<double>> cost(p.points.size(), std::vector<double>(g.points.size()));
    for (std::size_t i = 0; i < p.points.size(); ++i)
      for (std::size_t j = 0; j < g.points.size(); ++j) cost[i][j] = dist(p.points[i], g.points[j]);
    const auto a = min_cost_assignment(cost);
    total = a.cost;
    paired = std::min(p.points.size(), g.points.size());
  }
  total += static_cast<double>(larger - paired);
  return 100.0 * total / static_cast<double>(larger);
}

/// One side (prediction or ground truth) of an evaluated image.
struct LayoutAnnotation {
  SegMask mask;
  KeypointSet keypoints;
};

struct EvalPair {
  std::string image_id;
  ImageSize image;
  LayoutAnnotation prediction;
  LayoutAnnotation ground_truth;
};

struct ImageMetrics {
  std::string image_id;
  bool ok = false;
  double pixel_error_pct = 0.0;
  double keypoint_error_pct = 0.0;
  std::string error;
};

struct MetricsReport {
  double pixel_error_pct = 0.0;
  double keypoint_error_pct = 0.0;
  std::size_t image_count = 0;  // images that entered the means
  std::size_t skipped = 0;
  std::vector<ImageMetrics> images;
};

struct EvalOptions {
  bool wall_permutation_tolerant = false;
  unsigned jobs = 1;
};

inline ImageMetrics evaluate_image(const EvalPair& pair, const EvalOptions& opt) {
  ImageMetrics m;
  m.image_id = pair.image_id;
  try {
    m.pixel_error_pct =
        pixel_error(pair.prediction.mask, pair.ground_truth.mask, opt.wall_permutation_tolerant);
    m.keypoint_error_pct = keypoint_error(pair.prediction.keypoints, pair.ground_truth.keypoints, pair.image);
    m.ok = true;
  } catch (const std::exception& e) {
    m.error = e.what();
  }
  return m;
}

/// Per-image metrics at each image's own size, then unweighted means over
/// the images that could be evaluated.
inline MetricsReport dataset_eval(std::span<const EvalPair> pairs, const EvalOptions& opt = {}) {
  if (pairs.empty()) throw ValidationError("evaluation needs at least one image");
  MetricsReport r;
  r.images.resize(pairs.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(opt.jobs, pairs.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) r.images[i] = evaluate_image(pairs[i], opt);
  } else {
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < pairs.size(); i += jobs) r.images[i] = evaluate_image(pairs[i], opt);
      }));
    for (auto& f : workers) f.get();
  }

  double pe = 0.0, kpe = 0.0;
  for (const auto& m : r.images) {
    if (!m.ok) {
      ++r.skipped;
      continue;
    }
    pe += m.pixel_error_pct;
    kpe += m.keypoint_error_pct;
    ++r.image_count;
  }
  if (r.image_count == 0) throw ComputationError("no image could be evaluated");
  r.pixel_error_pct = pe / static_cast<double>(r.image_count);
  r.keypoint_error_pct = kpe / static_cast<double>(r.image_count);
  return r;
}

}  // namespace roomlayout
