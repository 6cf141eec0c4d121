#pragma once

// Layout construction from keypoints and chain-based rasterization.
//
// A layout is described by up to two x-monotone boundary chains (ceiling
// and floor) and 0-2 wall/wall boundary lines. Chains are evaluated as
// piecewise-linear functions of x whose first and last pieces extend to
// the image sides; pixels above the ceiling chain are ceiling, pixels below
// the floor chain are floor and the rest is split into walls by the
// boundary lines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

/// x-monotone polyline; y(x) extrapolates the end pieces linearly.
struct Chain {
  std::vector<Vec2> points;

  double y_at(double x) const {
    const std::size_t n = points.size();
    std::size_t i = 0;
    if (x >= points[n - 2].x()) {
      i = n - 2;
    } else {
      while (i + 2 < n && x >= points[i + 1].x()) ++i;
    }
    const Vec2& p = points[i];
    const Vec2& q = points[i + 1];
    return p.y() + (q.y() - p.y()) * (x - p.x()) / (q.x() - p.x());
  }
};

/// Wall/wall boundary as the infinite line through two keypoints.
struct WallBoundary {
  Vec2 a;
  Vec2 b;

  double x_at(double y) const { return a.x() + (b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()); }
};

struct Layout {
  Group group = Group::A;
  KeypointSet keypoints;
  bool floor_present = false;
  bool ceiling_present = false;
  ImageSize image;
  GroupBWallMapping b_mapping = GroupBWallMapping::LeftCenter;

  std::optional<Chain> ceiling;
  std::optional<Chain> floor;
  std::vector<WallBoundary> boundaries;  // left to right

  std::vector<SemanticLabel> wall_labels() const { return wall_labels_of_group(group, b_mapping); }

  int region_count() const {
    return group_info(group).wall_count + (floor_present ? 1 : 0) + (ceiling_present ? 1 : 0);
  }

  std::optional<RoomType> room_type() const { return type_of_layout(group, floor_present, ceiling_present); }
};

struct LayoutEdge {
  Segment2 segment;
  SemanticLabel first;   // region above / left
  SemanticLabel second;  // region below / right
};

namespace detail {

struct Topology {
  std::vector<int> ceiling_chain;
  std::vector<int> floor_chain;
  std::vector<std::pair<int, int>> boundaries;  // (upper id, lower id)
};

inline Topology topology_of(Group g) {
  switch (g) {
    case Group::A: return {{5, 1, 2, 6}, {7, 3, 4, 8}, {{1, 3}, {2, 4}}};
    case Group::B: return {{3, 1, 4}, {5, 2, 6}, {{1, 2}}};
    case Group::C: return {{1, 2}, {3, 4}, {}};
  }
  return {};
}

inline Chain make_chain(const KeypointSet& kps, const std::vector<int>& ids, const char* what) {
  Chain c;
  for (int id : ids) {
    const Keypoint* k = kps.find(id);
    c.points.emplace_back(k->x, k->y);
  }
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (!(c.points[i].x() > c.points[i - 1].x()))
      throw ValidationError(std::string(what) + " chain is not x-monotone at keypoint " +
                            std::to_string(ids[i]));
  return c;
}

inline double clamp_y(double y, double h) { return std::clamp(y, 0.0, h); }

}  // namespace detail

/// Builds the layout of `group` from keypoints. `kps` must hold exactly the
/// ids required by (group, floor_present, ceiling_present); keypoints given
/// in another frame are rescaled to `image_size`. Keypoints may lie up to
/// 10% outside the image; the resulting geometry is clipped to the image.
inline Layout build_layout(Group group, const KeypointSet& kps, bool floor_present, bool ceiling_present,
                           ImageSize image_size,
                           GroupBWallMapping b_mapping = GroupBWallMapping::LeftCenter) {
  if (image_size.empty()) throw ValidationError("layout image size must be positive");
  if (kps.group != group) throw ValidationError("keypoint set group does not match layout group");
  kps.validate();

  Layout l;
  l.group = group;
  l.floor_present = floor_present;
  l.ceiling_present = ceiling_present;
  l.image = image_size;
  l.b_mapping = b_mapping;
  l.keypoints = (kps.frame.empty() || kps.frame == image_size) ? kps : rescale_keypoints(kps, image_size);
  l.keypoints.frame = image_size;

  const auto required = required_keypoint_ids(group, floor_present, ceiling_present);
  for (int id : required)
    if (!l.keypoints.find(id)) throw ValidationError("missing keypoint id " + std::to_string(id));
  for (const auto& k : l.keypoints.points)
    if (std::find(required.begin(), required.end(), k.id) == required.end())
      throw ValidationError("unexpected keypoint id " + std::to_string(k.id));

  const double w = image_size.width, h = image_size.height;
  for (const auto& k : l.keypoints.points)
    if (k.x < -0.1 * w || k.x > 1.1 * w || k.y < -0.1 * h || k.y > 1.1 * h)
      throw ValidationError("keypoint " + std::to_string(k.id) + " lies more than 10% outside the image");

  const auto topo = detail::topology_of(group);
  if (ceiling_present) l.ceiling = detail::make_chain(l.keypoints, topo.ceiling_chain, "ceiling");
  if (floor_present) l.floor = detail::make_chain(l.keypoints, topo.floor_chain, "floor");
  // Group C without floor and ceiling has no keypoints and a single region.
  if (group != Group::C) {
    for (auto [up, down] : topo.boundaries) {
      const Keypoint* a = l.keypoints.find(up);
      const Keypoint* b = l.keypoints.find(down);
      if (!(std::abs(b->y - a->y) > 1e-9))
        throw ValidationError("degenerate wall boundary between keypoints " + std::to_string(up) + " and " +
                              std::to_string(down));
      l.boundaries.push_back({Vec2(a->x, a->y), Vec2(b->x, b->y)});
    }
  }

  if (l.ceiling && l.floor) {
    // Both chains are piecewise linear, so comparing at all breakpoints
    // inside the image and at the sides is exhaustive.
    std::vector<double> xs = {0.0, w};
    for (const auto& p : l.ceiling->points) xs.push_back(p.x());
    for (const auto& p : l.floor->points) xs.push_back(p.x());
    for (double x : xs) {
      if (x < 0.0 || x > w) continue;
      if (detail::clamp_y(l.ceiling->y_at(x), h) > detail::clamp_y(l.floor->y_at(x), h) + 1e-9)
        throw ValidationError("ceiling chain crosses below the floor chain");
    }
  }
  return l;
}

/// Pixel-center classification of a layout; never emits Void.
inline SegMask rasterize(const Layout& l, ImageSize size) {
  if (size.empty()) throw ValidationError("raster size must be positive");
  if (size != l.image) {
    const Layout scaled = build_layout(l.group, rescale_keypoints(l.keypoints, size), l.floor_present,
                                       l.ceiling_present, size, l.b_mapping);
    return rasterize(scaled, size);
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto walls = l.wall_labels();
  SegMask m(size.width, size.height, walls.front());

  std::vector<double> yc(static_cast<std::size_t>(size.width), -inf);
  std::vector<double> yf(static_cast<std::size_t>(size.width), inf);
  for (int x = 0; x < size.width; ++x) {
    const double px = x + 0.5;
    if (l.ceiling) yc[static_cast<std::size_t>(x)] = l.ceiling->y_at(px);
    if (l.floor) yf[static_cast<std::size_t>(x)] = l.floor->y_at(px);
  }
  std::vector<double> xb(l.boundaries.size());
  auto& codes = m.codes();
  const auto ceil_code = label_code(SemanticLabel::Ceiling);
  const auto floor_code = label_code(SemanticLabel::Floor);
  for (int y = 0; y < size.height; ++y) {
    const double py = y + 0.5;
    for (std::size_t k = 0; k < xb.size(); ++k) xb[k] = l.boundaries[k].x_at(py);
    std::uint8_t* row = codes.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width);
    for (int x = 0; x < size.width; ++x) {
      const double px = x + 0.5;
      if (py < yc[static_cast<std::size_t>(x)]) {
        row[x] = ceil_code;
      } else if (py > yf[static_cast<std::size_t>(x)]) {
        row[x] = floor_code;
      } else {
        std::size_t wall = 0;
        for (double b : xb) wall += px >= b ? 1 : 0;
        row[x] = label_code(walls[wall]);
      }
    }
  }
  return m;
}

inline SegMask rasterize(const Layout& l) { return rasterize(l, l.image); }

/// All boundary segments of the layout, clipped to the image and tagged
/// with the pair of regions they separate.
inline std::vector<LayoutEdge> edges_of_layout(const Layout& l) {
  std::vector<LayoutEdge> edges;
  const auto walls = l.wall_labels();
  const double w = l.image.width;

  auto add_chain = [&](const Chain& c, SemanticLabel outer, bool outer_first) {
    const std::size_t n = c.points.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      Vec2 a = c.points[i], b = c.points[i + 1];
      if (i == 0) a = Vec2(0.0, c.y_at(0.0));
      if (i + 2 == n) b = Vec2(w, c.y_at(w));
      if (a.x() > c.points[i].x()) a = c.points[i];
      if (b.x() < c.points[i + 1].x()) b = c.points[i + 1];
      auto clipped = clip_segment({a, b}, l.image);
      if (!clipped || (clipped->b - clipped->a).norm() < 1e-9) continue;
      const SemanticLabel wall = walls[std::min(i, walls.size() - 1)];
      edges.push_back(outer_first ? LayoutEdge{*clipped, outer, wall} : LayoutEdge{*clipped, wall, outer});
    }
  };
  if (l.ceiling) add_chain(*l.ceiling, SemanticLabel::Ceiling, true);
  if (l.floor) add_chain(*l.floor, SemanticLabel::Floor, false);
  for (std::size_t k = 0; k < l.boundaries.size(); ++k) {
    auto clipped = clip_segment({l.boundaries[k].a, l.boundaries[k].b}, l.image);
    if (!clipped || (clipped->b - clipped->a).norm() < 1e-9) continue;
    edges.push_back({*clipped, walls[k], walls[k + 1]});
  }
  return edges;
}

}  // namespace roomlayout
