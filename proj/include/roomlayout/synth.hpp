#pragma once

// Synthetic cuboid rooms with analytic ground truth.
//
// A scene is a box (center wall width 1, height r, depth d) seen by a
// pinhole camera placed inside it (frame conventions in camera.hpp). The
// analytic segmentation and depth come from casting the ray of every pixel
// center against the six box planes; keypoints come from projecting box
// corners and clipping box edges to the image.
//
// perturb() turns a ground truth into the three per-group inputs of the
// selection stage. The true group gets the ground truth (plus optional
// noise). The other groups get inputs produced as if the room had their
// wall count: walls are merged away (fewer walls) or hallucinated at a
// fixed image position (more walls), with the segmentation relabeled to
// that group's alphabet.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "roomlayout/camera.hpp"
#include "roomlayout/core_model.hpp"
#include "roomlayout/depth_fit.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/hypothesis.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

// Portable random helpers: std::mt19937_64 output is fully specified, the
// standard distributions are not, so bit-identical datasets need these.
namespace rng {

inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

inline double normal(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::size_t below(std::mt19937_64& g, std::size_t n) {
  return static_cast<std::size_t>(uniform01(g) * static_cast<double>(n)) % n;
}

/// Independent per-item seed from a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rng

enum class Face : std::uint8_t { Ceiling = 0, Floor = 1, LeftWall = 2, CenterWall = 3, RightWall = 4, BackWall = 5 };
inline constexpr std::size_t kFaceCount = 6;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SceneRanges {
  ImageSize image{320, 320};
  Interval r{0.5, 2.0};                 // center wall height / width
  Interval focal{0.6, 1.5};             // times image width
  Interval yaw_deg{-35.0, 35.0};
  Interval pitch_deg{-20.0, 20.0};
  Interval roll_deg{-5.0, 5.0};
  Interval depth{1.5, 4.0};             // box depth in wall widths
  Interval camera_x{0.15, 0.85};        // fraction of the wall width
  Interval camera_y{0.2, 0.8};          // fraction of the wall height
  Interval camera_distance{0.1, 0.95};  // fraction of the box depth
  std::optional<RoomType> room_type;    // rejection-sample until this type
  double min_region_fraction = 0.03;    // every visible region must be at least this large
  int max_attempts = 400000;

  /// Camera centered in front of the center wall, looking straight at it.
  static SceneRanges frontoparallel(ImageSize image = {320, 320}) {
    SceneRanges s;
    s.image = image;
    s.r = {1.0, 1.0};
    s.focal = {1.0, 1.0};
    s.yaw_deg = s.pitch_deg = s.roll_deg = {0.0, 0.0};
    s.depth = {3.0, 3.0};
    s.camera_x = {0.5, 0.5};
    s.camera_y = {0.5, 0.5};
    s.camera_distance = {0.7, 0.7};
    return s;
  }
};

struct SyntheticScene {
  double r = 1.0;  // box height (center wall width is 1)
  double d = 2.0;  // box depth
  double f = 320.0;
  Vec3 rotation = Vec3::Zero();     // axis-angle, world -> camera
  Vec3 translation = Vec3::Zero();  // world -> camera
  ImageSize image{320, 320};
  std::uint64_t seed = 0;
  RoomType room_type{0};

  PinholeCamera camera_for(ImageSize size) const {
    PinholeCamera c;
    c.fx = f * static_cast<double>(size.width) / image.width;
    c.fy = f * static_cast<double>(size.height) / image.height;
    c.cx = 0.5 * size.width;
    c.cy = 0.5 * size.height;
    c.rotation = rotation_from_axis_angle(rotation);
    c.translation = translation;
    return c;
  }
  PinholeCamera camera() const { return camera_for(image); }

  /// The scene camera expressed as a cuboid fit, e.g. for render_depth.
  CameraFit as_fit() const {
    CameraFit fit;
    fit.r = r;
    fit.f = f;
    fit.rotation = rotation;
    fit.translation = translation;
    fit.image = image;
    fit.converged = true;
    return fit;
  }

  friend bool operator==(const SyntheticScene&, const SyntheticScene&) = default;
};

/// Per-pixel first-hit faces and depths of a scene.
struct SceneView {
  ImageSize size;
  std::vector<std::uint8_t> faces;
  std::vector<double> depth;
  std::array<std::size_t, kFaceCount> counts{};

  bool visible(Face f) const { return counts[static_cast<std::size_t>(f)] > 0; }
};

inline std::pair<Face, double> cast_ray(const Vec3& c, const Vec3& dir, double r, double d) {
  Face face = Face::CenterWall;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](Face f, double lambda) {
    if (lambda > 0.0 && lambda < best) {
      best = lambda;
      face = f;
    }
  };
  if (dir.x() < 0.0) consider(Face::LeftWall, -c.x() / dir.x());
  if (dir.x() > 0.0) consider(Face::RightWall, (1.0 - c.x()) / dir.x());
  if (dir.y() < 0.0) consider(Face::Ceiling, -c.y() / dir.y());
  if (dir.y() > 0.0) consider(Face::Floor, (r - c.y()) / dir.y());
  if (dir.z() > 0.0) consider(Face::CenterWall, -c.z() / dir.z());
  if (dir.z() < 0.0) consider(Face::BackWall, (-d - c.z()) / dir.z());
  return {face, best};
}

/// Casts the rays of every `stride`-th pixel center of a `size` raster.
inline SceneView render_scene(const SyntheticScene& s, ImageSize size, int stride = 1) {
  const PinholeCamera cam = s.camera_for(size);
  const Vec3 c = cam.center();
  SceneView v;
  v.size = {(size.width + stride - 1) / stride, (size.height + stride - 1) / stride};
  v.faces.resize(v.size.area());
  v.depth.resize(v.size.area());
  std::size_t i = 0;
  for (int y = 0; y < size.height; y += stride) {
    for (int x = 0; x < size.width; x += stride, ++i) {
      const auto [face, lambda] = cast_ray(c, cam.ray_direction(x + 0.5, y + 0.5), s.r, s.d);
      v.faces[i] = static_cast<std::uint8_t>(face);
      v.depth[i] = lambda;
      ++v.counts[static_cast<std::size_t>(face)];
    }
  }
  return v;
}

/// Wall configuration of a (possibly hypothetical) room: x positions of the
/// vertical wall/wall corners on the center-wall plane. A missing corner
/// means the neighbouring wall is absent and the center wall continues.
struct WallCorners {
  std::optional<double> left;
  std::optional<double> right;

  Group group() const {
    const int n = (left ? 1 : 0) + (right ? 1 : 0);
    return n == 2 ? Group::A : n == 1 ? Group::B : Group::C;
  }
};

namespace detail {

inline constexpr double kFar = 100.0;

struct KeypointBuilder {
  const PinholeCamera& cam;
  ImageSize image;
  double r;
  double d;
  WallCorners corners;
  bool strict;
  bool ok = true;

  void fail() { ok = false; }

  Vec2 fallback(const Vec3& p) const {
    const Vec3 pc = cam.to_camera(p);
    if (pc.z() > 1e-6) return cam.project_camera(pc);
    return Vec2(0.5 * image.width, 0.5 * image.height);
  }

  // Top (ceiling) or bottom (floor) end of the vertical edge at x.
  Vec2 vertical_end(double x, bool top, bool junction_visible) {
    const Vec3 jc(x, 0.0, 0.0), jf(x, r, 0.0);
    const auto vp = visible_part(cam, jc, jf, image);
    if (junction_visible) {
      if (strict && !(vp && (top ? vp->starts_inside : vp->ends_inside))) fail();
      return fallback(top ? jc : jf);
    }
    if (!vp) {
      if (strict) fail();
      return fallback(top ? jc : jf);
    }
    const Vec2 p = top ? vp->a : vp->b;
    const bool on_border = top ? (!vp->starts_inside && std::abs(p.y()) < 1e-6)
                               : (!vp->ends_inside && std::abs(p.y() - image.height) < 1e-6);
    if (strict && !on_border) fail();
    return p;
  }

  // Where the edge from a visible junction along `dir` leaves the image.
  Vec2 exit(const Vec3& from, const Vec3& dir, double length) {
    const auto vp = visible_part(cam, from, from + length * dir, image);
    if (!vp || !vp->starts_inside || vp->ends_inside) {
      if (strict) fail();
      return vp ? vp->b : fallback(from);
    }
    return vp->b;
  }

  // Visible stretch of a horizontal center-wall line (group C).
  std::pair<Vec2, Vec2> line_ends(double y, double x0, double x1) {
    const auto vp = visible_part(cam, Vec3(x0, y, 0.0), Vec3(x1, y, 0.0), image);
    if (!vp || vp->starts_inside || vp->ends_inside) {
      if (strict) fail();
      if (!vp) return {Vec2(0.0, y < 1e-12 ? 0.0 : image.height), Vec2(image.width, y < 1e-12 ? 0.0 : image.height)};
    }
    Vec2 a = vp->a, b = vp->b;
    if (a.x() > b.x()) std::swap(a, b);
    return {a, b};
  }

  KeypointSet build(bool floor, bool ceiling) {
    const Group g = corners.group();
    KeypointSet k;
    k.group = g;
    k.frame = image;
    auto put = [&](int id, const Vec2& p) { k.points.push_back({id, p.x(), p.y(), 1.0}); };
    const Vec3 toward_camera(0.0, 0.0, -1.0);
    if (g == Group::A) {
      const double xl = *corners.left, xr = *corners.right;
      put(1, vertical_end(xl, true, ceiling));
      put(2, vertical_end(xr, true, ceiling));
      put(3, vertical_end(xl, false, floor));
      put(4, vertical_end(xr, false, floor));
      if (ceiling) {
        put(5, exit(Vec3(xl, 0, 0), toward_camera, d));
        put(6, exit(Vec3(xr, 0, 0), toward_camera, d));
      }
      if (floor) {
        put(7, exit(Vec3(xl, r, 0), toward_camera, d));
        put(8, exit(Vec3(xr, r, 0), toward_camera, d));
      }
    } else if (g == Group::B) {
      const bool left_corner = corners.left.has_value();
      const double x = left_corner ? *corners.left : *corners.right;
      // Left and right directions away from the corner along each wall.
      const Vec3 dir_l = left_corner ? toward_camera : Vec3(-1, 0, 0);
      const Vec3 dir_r = left_corner ? Vec3(1, 0, 0) : toward_camera;
      const double len_l = left_corner ? d : kFar;
      const double len_r = left_corner ? kFar : d;
      put(1, vertical_end(x, true, ceiling));
      put(2, vertical_end(x, false, floor));
      if (ceiling) {
        put(3, exit(Vec3(x, 0, 0), dir_l, len_l));
        put(4, exit(Vec3(x, 0, 0), dir_r, len_r));
      }
      if (floor) {
        put(5, exit(Vec3(x, r, 0), dir_l, len_l));
        put(6, exit(Vec3(x, r, 0), dir_r, len_r));
      }
    } else {
      if (ceiling) {
        auto [a, b] = line_ends(0.0, -kFar, kFar);
        put(1, a);
        put(2, b);
      }
      if (floor) {
        auto [a, b] = line_ends(r, -kFar, kFar);
        put(3, a);
        put(4, b);
      }
    }
    k.sort();
    return k;
  }
};

inline bool chains_monotone(const KeypointSet& k, bool floor, bool ceiling) {
  const auto topo = topology_of(k.group);
  auto mono = [&](const std::vector<int>& ids) {
    for (std::size_t i = 1; i < ids.size(); ++i)
      if (!(k.find(ids[i])->x > k.find(ids[i - 1])->x + 1e-6)) return false;
    return true;
  };
  if (ceiling && !mono(topo.ceiling_chain)) return false;
  if (floor && !mono(topo.floor_chain)) return false;
  return true;
}

inline KeypointSet clamp_to_frame(KeypointSet k) {
  for (auto& p : k.points) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(k.frame.width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(k.frame.height));
  }
  return k;
}

}  // namespace detail

/// Visible-wall analysis of a rendered scene: the true wall configuration
/// and floor/ceiling flags, or nullopt when the view is not a clean room
/// type (no center wall, back wall visible, non-contiguous walls).
struct SceneTopology {
  WallCorners corners;
  bool floor = false;
  bool ceiling = false;
  std::vector<Face> walls;  // visible walls, left to right
};

inline std::optional<SceneTopology> scene_topology(const SceneView& v) {
  if (v.visible(Face::BackWall) || !v.visible(Face::CenterWall)) return std::nullopt;
  SceneTopology t;
  t.floor = v.visible(Face::Floor);
  t.ceiling = v.visible(Face::Ceiling);
  if (v.visible(Face::LeftWall)) {
    t.corners.left = 0.0;
    t.walls.push_back(Face::LeftWall);
  }
  t.walls.push_back(Face::CenterWall);
  if (v.visible(Face::RightWall)) {
    t.corners.right = 1.0;
    t.walls.push_back(Face::RightWall);
  }
  if (t.corners.group() == Group::C && !t.floor && !t.ceiling) return std::nullopt;
  return t;
}

/// Keypoints of a (possibly hypothetical) wall configuration. In strict
/// mode nullopt is returned unless every keypoint is a clean junction or
/// border crossing and the chains are x-monotone; otherwise best-effort
/// points are returned. Points are clamped to the image in both modes.
inline std::optional<KeypointSet> project_keypoints(const SyntheticScene& s, ImageSize size, WallCorners corners,
                                                    bool floor, bool ceiling, bool strict) {
  const PinholeCamera cam = s.camera_for(size);
  detail::KeypointBuilder b{cam, size, s.r, s.d, corners, strict};
  KeypointSet k = b.build(floor, ceiling);
  if (strict) {
    if (!b.ok || !detail::chains_monotone(k, floor, ceiling)) return std::nullopt;
  }
  return detail::clamp_to_frame(k);
}

/// Face -> label mapping of a scene for the given (possibly hypothetical)
/// group. `walls` lists the physical visible walls left to right and
/// `wall_slot[i]` the index into the group's wall labels for walls[i].
inline SegMask label_faces(const SceneView& v, const std::vector<Face>& walls, const std::vector<std::size_t>& wall_slot,
                           Group g, GroupBWallMapping mapping = GroupBWallMapping::LeftCenter) {
  const auto labels = wall_labels_of_group(g, mapping);
  std::array<SemanticLabel, kFaceCount> lut = {SemanticLabel::Ceiling, SemanticLabel::Floor, SemanticLabel::Void,
                                               SemanticLabel::Void,    SemanticLabel::Void,  SemanticLabel::Void};
  for (std::size_t i = 0; i < walls.size(); ++i) lut[static_cast<std::size_t>(walls[i])] = labels[wall_slot[i]];
  SegMask m(v.size.width, v.size.height);
  auto& codes = m.codes();
  for (std::size_t i = 0; i < v.faces.size(); ++i) codes[i] = label_code(lut[v.faces[i]]);
  return m;
}

struct GroundTruth {
  SyntheticScene scene;
  RoomType room_type{0};
  Group group = Group::A;
  bool floor_present = false;
  bool ceiling_present = false;
  SceneTopology topology;
  KeypointSet keypoints;
  SegMask mask;
  DepthMap depth;
  SceneView view;
};

namespace detail {

inline bool regions_clean(const SceneView& v, double min_fraction) {
  const double min_count = min_fraction * static_cast<double>(v.faces.size());
  for (std::size_t f = 0; f < kFaceCount; ++f)
    if (v.counts[f] > 0 && static_cast<double>(v.counts[f]) < min_count) return false;
  return true;
}

inline std::vector<std::size_t> identity_slots(std::size_t n) {
  std::vector<std::size_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

}  // namespace detail

/// Analytic ground truth of a scene rendered at `size`.
inline GroundTruth scene_to_groundtruth(const SyntheticScene& s, ImageSize size) {
  if (size.empty()) throw ValidationError("image size must be positive");
  GroundTruth gt;
  gt.scene = s;
  gt.view = render_scene(s, size);
  const auto topo = scene_topology(gt.view);
  if (!topo) throw ComputationError("degenerate projection: view is not a valid room type");
  gt.topology = *topo;
  gt.group = topo->corners.group();
  gt.floor_present = topo->floor;
  gt.ceiling_present = topo->ceiling;
  gt.room_type = *type_of_layout(gt.group, gt.floor_present, gt.ceiling_present);
  auto kps = project_keypoints(s, size, topo->corners, topo->floor, topo->ceiling, true);
  if (!kps) throw ComputationError("degenerate projection: keypoints are not clean junctions/border points");
  gt.keypoints = std::move(*kps);
  gt.mask = label_faces(gt.view, topo->walls, detail::identity_slots(topo->walls.size()), gt.group);

  gt.depth.width = size.width;
  gt.depth.height = size.height;
  gt.depth.depth = gt.view.depth;
  gt.depth.min = *std::min_element(gt.depth.depth.begin(), gt.depth.depth.end());
  gt.depth.max = *std::max_element(gt.depth.depth.begin(), gt.depth.depth.end());
  return gt;
}

inline GroundTruth scene_to_groundtruth(const SyntheticScene& s) { return scene_to_groundtruth(s, s.image); }

/// Deterministically samples a scene for `seed`, rejecting views that are
/// not a clean room type (or not the requested one).
inline SyntheticScene sample_scene(std::uint64_t seed, const SceneRanges& ranges = {}) {
  if (ranges.image.empty()) throw ValidationError("image size must be positive");
  auto check = [](Interval i, const char* what) {
    if (!(i.lo <= i.hi) || !std::isfinite(i.lo) || !std::isfinite(i.hi))
      throw ValidationError(std::string("invalid range for ") + what);
  };
  check(ranges.r, "r");
  check(ranges.focal, "focal");
  check(ranges.depth, "depth");
  if (ranges.r.lo <= 0.0 || ranges.focal.lo <= 0.0 || ranges.depth.lo <= 0.0)
    throw ValidationError("r, focal and depth ranges must be positive");
  if (ranges.room_type) group_of_type(*ranges.room_type);  // validates the id

  std::mt19937_64 gen(seed);
  constexpr double deg = 3.14159265358979323846 / 180.0;
  const int coarse = std::max(1, std::min(ranges.image.width, ranges.image.height) / 64);
  for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
    SyntheticScene s;
    s.image = ranges.image;
    s.seed = seed;
    s.r = rng::uniform(gen, ranges.r.lo, ranges.r.hi);
    s.f = rng::uniform(gen, ranges.focal.lo, ranges.focal.hi) * ranges.image.width;
    s.d = rng::uniform(gen, ranges.depth.lo, ranges.depth.hi);
    const double yaw = rng::uniform(gen, ranges.yaw_deg.lo, ranges.yaw_deg.hi) * deg;
    const double pitch = rng::uniform(gen, ranges.pitch_deg.lo, ranges.pitch_deg.hi) * deg;
    const double roll = rng::uniform(gen, ranges.roll_deg.lo, ranges.roll_deg.hi) * deg;
    const Vec3 center(rng::uniform(gen, ranges.camera_x.lo, ranges.camera_x.hi),
                      rng::uniform(gen, ranges.camera_y.lo, ranges.camera_y.hi) * s.r,
                      -rng::uniform(gen, ranges.camera_distance.lo, ranges.camera_distance.hi) * s.d);
    const Eigen::Matrix3d cam_to_world = (Eigen::AngleAxisd(yaw, Vec3::UnitY()) *
                                          Eigen::AngleAxisd(pitch, Vec3::UnitX()) *
                                          Eigen::AngleAxisd(roll, Vec3::UnitZ()))
                                             .toRotationMatrix();
    const Eigen::Matrix3d world_to_cam = cam_to_world.transpose();
    s.rotation = axis_angle_from_rotation(world_to_cam);
    s.translation = -(world_to_cam * center);

    // Cheap screen on a coarse grid before the full-resolution checks.
    const SceneView coarse_view = render_scene(s, ranges.image, coarse);
    const auto coarse_topo = scene_topology(coarse_view);
    if (!coarse_topo) continue;
    const auto coarse_type = type_of_layout(coarse_topo->corners.group(), coarse_topo->floor, coarse_topo->ceiling);
    if (ranges.room_type && !(coarse_type && *coarse_type == *ranges.room_type)) continue;
    if (!detail::regions_clean(coarse_view, ranges.min_region_fraction)) continue;

    const SceneView view = render_scene(s, ranges.image);
    const auto topo = scene_topology(view);
    if (!topo || !detail::regions_clean(view, ranges.min_region_fraction)) continue;
    const auto type = type_of_layout(topo->corners.group(), topo->floor, topo->ceiling);
    if (!type || (ranges.room_type && !(*type == *ranges.room_type))) continue;
    if (!project_keypoints(s, ranges.image, topo->corners, topo->floor, topo->ceiling, true)) continue;
    s.room_type = *type;
    return s;
  }
  throw ComputationError("scene rejection budget exhausted for seed " + std::to_string(seed));
}

struct NoiseConfig {
  double keypoint_sigma = 0.0;   // pixels, image frame
  double label_flip = 0.0;       // per-pixel probability
  int boundary_radius = 0;       // dilation radius of one random region
  std::uint64_t seed = 0;
};

struct PerturbOptions {
  ImageSize heatmap_size = kDefaultHeatmapSize;
  double sigma = kDefaultSigma;
  /// Image x position (fraction of the width, measured from the nearer
  /// side) of a hallucinated wall/wall edge.
  double hallucination_offset = 0.2;
  GroupBWallMapping b_mapping = GroupBWallMapping::LeftCenter;
};

namespace detail {

// x on the center-wall plane seen at image point (u, v); nullopt if the
// ray does not reach the plane in front of the camera.
inline std::optional<double> wall_x_at(const PinholeCamera& cam, double u, double v) {
  const Vec3 c = cam.center();
  const Vec3 dir = cam.ray_direction(u, v);
  if (!(dir.z() > 1e-12)) return std::nullopt;
  const double lambda = -c.z() / dir.z();
  if (!(lambda > 0.0)) return std::nullopt;
  return c.x() + lambda * dir.x();
}

struct Hypothetical {
  WallCorners corners;
  std::vector<std::size_t> slots;  // label slot of each physical visible wall
};

inline Hypothetical hypothetical_walls(const GroundTruth& gt, Group target, const PinholeCamera& cam,
                                       const PerturbOptions& opt) {
  const auto& walls = gt.topology.walls;
  const std::size_t n = walls.size();
  const std::size_t m = static_cast<std::size_t>(group_info(target).wall_count);
  auto count = [&](Face f) { return gt.view.counts[static_cast<std::size_t>(f)]; };
  Hypothetical h;
  if (m == n) {
    h.corners = gt.topology.corners;
    h.slots = identity_slots(n);
    return h;
  }
  const double w = gt.mask.width(), hgt = gt.mask.height();
  auto hallucinated = [&](bool left) {
    const double u = left ? opt.hallucination_offset * w : (1.0 - opt.hallucination_offset) * w;
    return wall_x_at(cam, u, 0.5 * hgt).value_or(left ? 0.0 : 1.0);
  };
  if (m < n) {
    if (m == 1) {
      h.slots.assign(n, 0);  // everything becomes the single wall
      return h;
    }
    // three walls seen as two: merge the smaller side wall into the center
    if (count(Face::LeftWall) < count(Face::RightWall)) {
      h.corners.right = 1.0;
      h.slots = {0, 0, 1};
    } else {
      h.corners.left = 0.0;
      h.slots = {0, 1, 1};
    }
    return h;
  }
  // m > n: hallucinate walls
  if (n == 1) {
    if (m == 3) {
      h.corners.left = hallucinated(true);
      h.corners.right = hallucinated(false);
      h.slots = {1};
      return h;
    }
    // Add the wall on the side where the real corner is closer to the view.
    const Vec2 pl = cam.project(Vec3(0.0, 0.5 * gt.scene.r, 0.0));
    const Vec2 pr = cam.project(Vec3(1.0, 0.5 * gt.scene.r, 0.0));
    const double dl = cam.to_camera(Vec3(0.0, 0.5 * gt.scene.r, 0.0)).z() > 0 ? -pl.x() : 1e300;
    const double dr = cam.to_camera(Vec3(1.0, 0.5 * gt.scene.r, 0.0)).z() > 0 ? pr.x() - w : 1e300;
    if (dl <= dr) {
      h.corners.left = hallucinated(true);
      h.slots = {1};
    } else {
      h.corners.right = hallucinated(false);
      h.slots = {0};
    }
    return h;
  }
  // two walls seen as three
  h.corners = gt.topology.corners;
  if (!h.corners.left) {
    h.corners.left = hallucinated(true);
    h.slots = {1, 2};
  } else {
    h.corners.right = hallucinated(false);
    h.slots = {0, 1};
  }
  return h;
}

inline void dilate_label(SegMask& m, std::uint8_t code, int radius) {
  if (radius <= 0) return;
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> hit(m.pixel_count(), 0), tmp(m.pixel_count(), 0);
  const auto& c = m.codes();
  for (std::size_t i = 0; i < c.size(); ++i) hit[i] = c[i] == code;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !any; ++k)
        any = hit[static_cast<std::size_t>(y * w + k)] != 0;
      tmp[static_cast<std::size_t>(y * w + x)] = any;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !any; ++k)
        any = tmp[static_cast<std::size_t>(k * w + x)] != 0;
      if (any) m.codes()[static_cast<std::size_t>(y * w + x)] = code;
    }
}

}  // namespace detail

/// Replaces each non-void pixel with probability p by a different label
/// drawn uniformly from the labels present in the mask. Returns the number
/// of flipped pixels.
inline std::size_t flip_labels(SegMask& m, double p, std::mt19937_64& gen) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("label flip probability must lie in [0,1]");
  const auto hist = m.histogram();
  std::vector<std::uint8_t> present;
  for (std::size_t l = 1; l < kLabelCount; ++l)
    if (hist[l] > 0) present.push_back(static_cast<std::uint8_t>(l));
  if (present.size() < 2 || p == 0.0) return 0;
  std::size_t flipped = 0;
  for (auto& c : m.codes()) {
    if (c == 0 || rng::uniform01(gen) >= p) continue;
    const auto own = static_cast<std::size_t>(std::find(present.begin(), present.end(), c) - present.begin());
    std::size_t idx = rng::below(gen, present.size() - 1);
    if (own < present.size() && idx >= own) ++idx;
    c = present[idx];
    ++flipped;
  }
  return flipped;
}

/// The three selection inputs (indexed A, B, C) for a ground truth.
inline std::array<HypothesisInput, 3> perturb(const GroundTruth& gt, const NoiseConfig& noise,
                                              const PerturbOptions& opt = {}) {
  if (noise.keypoint_sigma < 0.0 || noise.boundary_radius < 0 || !(noise.label_flip >= 0.0) || noise.label_flip > 1.0)
    throw ValidationError("noise parameters must be non-negative and probabilities at most 1");
  std::mt19937_64 gen(noise.seed);
  const ImageSize size = gt.mask.size();
  const PinholeCamera cam = gt.scene.camera_for(size);
  std::array<HypothesisInput, 3> out;
  for (Group g : kAllGroups) {
    HypothesisInput& in = out[static_cast<std::size_t>(g)];
    in.group = g;
    KeypointSet kps;
    if (g == gt.group) {
      in.segmentation = label_faces(gt.view, gt.topology.walls, detail::identity_slots(gt.topology.walls.size()), g,
                                    opt.b_mapping);
      kps = gt.keypoints;
    } else {
      const auto hyp = detail::hypothetical_walls(gt, g, cam, opt);
      in.segmentation = label_faces(gt.view, gt.topology.walls, hyp.slots, g, opt.b_mapping);
      kps = *project_keypoints(gt.scene, size, hyp.corners, gt.floor_present, gt.ceiling_present, false);
    }
    if (noise.keypoint_sigma > 0.0) {
      for (auto& k : kps.points) {
        k.x += noise.keypoint_sigma * rng::normal(gen);
        k.y += noise.keypoint_sigma * rng::normal(gen);
      }
    }
    kps = detail::clamp_to_frame(kps);
    if (noise.boundary_radius > 0) {
      const auto hist = in.segmentation.histogram();
      std::vector<std::uint8_t> present;
      for (std::size_t l = 1; l < kLabelCount; ++l)
        if (hist[l] > 0) present.push_back(static_cast<std::uint8_t>(l));
      if (!present.empty())
        detail::dilate_label(in.segmentation, present[rng::below(gen, present.size())], noise.boundary_radius);
    }
    flip_labels(in.segmentation, noise.label_flip, gen);
    in.heatmaps = encode(kps, opt.heatmap_size, opt.sigma);
  }
  return out;
}

}  // namespace roomlayout
