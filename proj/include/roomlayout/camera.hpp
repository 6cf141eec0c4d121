#pragma once

// Pinhole camera shared by the synthetic scene generator and the cuboid
// fit. World/box frame: x to the right, y down, z away from the camera
// towards the center wall. The center wall lies in the plane z = 0 and
// spans x in [0, 1], y in [0, r]; side walls extend towards negative z.

#include <cmath>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roomlayout/geometry.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

inline Eigen::Matrix3d rotation_from_axis_angle(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

inline Vec3 axis_angle_from_rotation(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

struct PinholeCamera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();                         // world -> camera

  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
  Vec3 center() const { return -rotation.transpose() * translation; }

  Vec2 project_camera(const Vec3& pc) const { return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy}; }
  Vec2 project(const Vec3& p) const { return project_camera(to_camera(p)); }

  /// World-frame direction of the ray through image point (u, v), scaled so
  /// that its camera-frame z component is 1.
  Vec3 ray_direction(double u, double v) const {
    return rotation.transpose() * Vec3((u - cx) / fx, (v - cy) / fy, 1.0);
  }
};

/// The image of a 3D segment P->Q after clipping to the near plane and the
/// image rectangle. `starts_inside` / `ends_inside` tell whether P / Q
/// themselves are visible.
struct VisiblePart {
  Vec2 a;
  Vec2 b;
  bool starts_inside = false;
  bool ends_inside = false;
};

inline std::optional<VisiblePart> visible_part(const PinholeCamera& cam, const Vec3& p, const Vec3& q,
                                               ImageSize image, double z_near = 1e-4) {
  const Vec3 pc = cam.to_camera(p);
  const Vec3 qc = cam.to_camera(q);
  double s0 = 0.0, s1 = 1.0;
  if (pc.z() < z_near && qc.z() < z_near) return std::nullopt;
  if (pc.z() < z_near) s0 = (z_near - pc.z()) / (qc.z() - pc.z());
  if (qc.z() < z_near) s1 = (z_near - pc.z()) / (qc.z() - pc.z());
  const Vec2 a = cam.project_camera(pc + s0 * (qc - pc));
  const Vec2 b = cam.project_camera(pc + s1 * (qc - pc));
  auto range = clip_parametric(a, b, image.width, image.height);
  if (!range) return std::nullopt;
  VisiblePart v;
  v.a = a + range->first * (b - a);
  v.b = a + range->second * (b - a);
  v.starts_inside = s0 == 0.0 && range->first == 0.0;
  v.ends_inside = s1 == 1.0 && range->second == 1.0;
  return v;
}

}  // namespace roomlayout
