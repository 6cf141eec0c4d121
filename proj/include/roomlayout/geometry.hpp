#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "roomlayout/types.hpp"

namespace roomlayout {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct Segment2 {
  Vec2 a;
  Vec2 b;
};

/// Liang-Barsky clip of the parametric segment a + t (b - a), t in [t0, t1],
/// against the axis-aligned rectangle [0, w] x [0, h]. Returns the clipped
/// parameter interval or nullopt when nothing is inside.
inline std::optional<std::pair<double, double>> clip_parametric(const Vec2& a, const Vec2& b, double w,
                                                                double h, double t0 = 0.0,
                                                                double t1 = 1.0) {
  const Vec2 d = b - a;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x(), w - a.x(), a.y(), h - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return std::nullopt;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return std::nullopt;
      if (r < t1) t1 = r;
    }
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

inline std::optional<Segment2> clip_segment(const Segment2& s, ImageSize image) {
  auto range = clip_parametric(s.a, s.b, image.width, image.height);
  if (!range) return std::nullopt;
  const Vec2 d = s.b - s.a;
  return Segment2{s.a + range->first * d, s.a + range->second * d};
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Normalized implicit line (a, b, c), a^2 + b^2 = 1, through p and q.
/// Signed distance of a point is a*x + b*y + c.
inline std::optional<Eigen::Vector3d> line_through(const Vec2& p, const Vec2& q) {
  const Vec2 d = q - p;
  const double n = d.norm();
  if (!(n > 1e-12)) return std::nullopt;
  const double a = -d.y() / n, b = d.x() / n;
  return Eigen::Vector3d(a, b, -(a * p.x() + b * p.y()));
}

}  // namespace roomlayout
