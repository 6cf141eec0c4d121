#pragma once

// Relative depth from a three-wall layout with floor and ceiling.
//
// The room is modelled as a box whose center wall has width 1 (this fixes
// the global scale) and height r. The camera has focal length f, principal
// point at the image center and pose (axis-angle rotation, translation).
// Parameters are found by damped least squares (Levenberg-Marquardt with
// Marquardt diagonal scaling) on
//   * the reprojection error of the four center-wall corners (ids 1-4),
//   * one of two edge terms for the four edges that leave the center-wall
//     corners towards the camera:
//       ExitPoint  distance of each border-exit keypoint (ids 5-8) to the
//                  projected model edge (default);
//       Sampled    distances of points sampled along each model edge, at
//                  0.1..1.0 wall widths from the corner, to the image line
//                  through the (junction, border exit) keypoint pair,
//   * a weak prior pulling f towards its initial value.
// The per-pixel depth is then the camera-frame z of the intersection of the
// pixel ray with the plane of the pixel's layout region.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "roomlayout/camera.hpp"
#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/layout.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

enum class EdgeResidual { ExitPoint, Sampled };

struct FitOptions {
  EdgeResidual edge_residual = EdgeResidual::ExitPoint;
  int samples_per_edge = 10;  // Sampled only
  bool homography_init = true;
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double relative_cost_tolerance = 1e-10;
  double step_tolerance = 1e-10;
  double jacobian_step = 1.5e-8;  // about sqrt(machine epsilon)
  double focal_prior_weight = 1e-3;
  double degeneracy_condition = 1e8;
};

struct CameraFit {
  double r = 1.0;  // center wall height / width
  double f = 1.0;  // focal length in pixels
  Vec3 rotation = Vec3::Zero();
  Vec3 translation = Vec3::Zero();  // in wall widths
  double rms_residual = 0.0;        // pixels, prior excluded
  bool converged = false;
  int iterations = 0;
  bool degenerate = false;
  double condition = 0.0;
  ImageSize image;

  PinholeCamera camera() const { return camera_for(image); }

  /// Camera for a raster of another size (intrinsics scaled per axis).
  PinholeCamera camera_for(ImageSize size) const {
    PinholeCamera c;
    const double sx = static_cast<double>(size.width) / image.width;
    const double sy = static_cast<double>(size.height) / image.height;
    c.fx = f * sx;
    c.fy = f * sy;
    c.cx = 0.5 * size.width;
    c.cy = 0.5 * size.height;
    c.rotation = rotation_from_axis_angle(rotation);
    c.translation = translation;
    return c;
  }
};

/// Parameter vector layout: r, f, rotation (3), translation (3).
using FitParams = Eigen::Matrix<double, 8, 1>;

/// Residual model of the cuboid fit; exposed for gradient checks.
class CuboidFitProblem {
 public:
  CuboidFitProblem(const KeypointSet& kps, ImageSize image, const FitOptions& opt = {})
      : image_(image), opt_(opt) {
    if (image.empty()) throw ValidationError("image size must be positive");
    if (kps.group != Group::A) throw ValidationError("depth fitting needs a group A layout");
    const KeypointSet k = (kps.frame.empty() || kps.frame == image) ? kps : rescale_keypoints(kps, image);
    for (int id = 1; id <= 8; ++id) {
      const Keypoint* p = k.find(id);
      if (!p) throw ValidationError("depth fitting needs keypoint id " + std::to_string(id) + " (type 0 layout)");
      kp_[static_cast<std::size_t>(id - 1)] = Vec2(p->x, p->y);
    }
    // Center wall quad in boundary order 1, 2, 4, 3 must be convex.
    const std::array<Vec2, 4> quad = {kp_[0], kp_[1], kp_[3], kp_[2]};
    double sign = 0.0;
    const double scale = image.diagonal();
    for (std::size_t i = 0; i < 4; ++i) {
      const Vec2 e0 = quad[(i + 1) % 4] - quad[i];
      const Vec2 e1 = quad[(i + 2) % 4] - quad[(i + 1) % 4];
      const double c = cross2(e0, e1);
      if (std::abs(c) < 1e-6 * scale * scale) throw ValidationError("degenerate center wall quad");
      if (sign == 0.0) sign = c;
      else if ((c > 0) != (sign > 0)) throw ValidationError("degenerate center wall quad");
    }
    for (std::size_t e = 0; e < 4; ++e) {
      auto line = line_through(kp_[e], kp_[e + 4]);
      if (!line) throw ValidationError("edge keypoints " + std::to_string(e + 1) + " and " +
                                       std::to_string(e + 5) + " coincide");
      lines_[e] = *line;
    }
    if (opt.edge_residual == EdgeResidual::Sampled && opt.samples_per_edge < 1)
      throw ValidationError("samples_per_edge must be positive");
    focal_prior_ = image.width;
  }

  int edge_residual_count() const {
    return opt_.edge_residual == EdgeResidual::Sampled ? 4 * opt_.samples_per_edge : 4;
  }
  int residual_count() const { return pixel_residual_count() + 1; }
  int pixel_residual_count() const { return 8 + edge_residual_count(); }
  double focal_prior() const { return focal_prior_; }
  const std::array<Vec2, 8>& keypoints() const { return kp_; }

  /// Box corner of the center wall matching keypoint id 1..4.
  static Vec3 corner(int id, double r) {
    return Vec3((id == 2 || id == 4) ? 1.0 : 0.0, (id >= 3) ? r : 0.0, 0.0);
  }

  /// Frontal camera at the depth that reproduces the projected wall width
  /// at f = image width.
  FitParams frontal_guess() const {
    const double width_px = 0.5 * ((kp_[1] - kp_[0]).norm() + (kp_[3] - kp_[2]).norm());
    const double height_px = 0.5 * ((kp_[2] - kp_[0]).norm() + (kp_[3] - kp_[1]).norm());
    const double f0 = focal_prior_;
    const double z0 = f0 / width_px;
    const double r0 = height_px / width_px;
    const Vec2 m = 0.25 * (kp_[0] + kp_[1] + kp_[2] + kp_[3]);
    FitParams p;
    p << r0, f0, 0.0, 0.0, 0.0, z0 * (m.x() - 0.5 * image_.width) / f0 - 0.5,
        z0 * (m.y() - 0.5 * image_.height) / f0 - 0.5 * r0, z0;
    return p;
  }

  /// Planar pose from the homography of the unit square onto the four
  /// center-wall corners. The focal length follows from the orthogonality
  /// of the wall axes; nullopt when that is ill-conditioned (e.g. a
  /// frontal view).
  std::optional<FitParams> homography_guess() const {
    const std::array<Vec2, 4> square = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)};
    const Vec2 c(0.5 * image_.width, 0.5 * image_.height);
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
      const Vec2& s = square[static_cast<std::size_t>(i)];
      const Vec2 q = kp_[static_cast<std::size_t>(i)] - c;
      a.row(2 * i) << s.x(), s.y(), 1, 0, 0, 0, -q.x() * s.x(), -q.x() * s.y();
      a.row(2 * i + 1) << 0, 0, 0, s.x(), s.y(), 1, -q.y() * s.x(), -q.y() * s.y();
      b[2 * i] = q.x();
      b[2 * i + 1] = q.y();
    }
    const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
    if (!h.allFinite()) return std::nullopt;
    Eigen::Matrix3d hm;
    hm << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0;
    const Vec3 h0 = hm.col(0), h1 = hm.col(1);
    const double f2 = -(h0.x() * h1.x() + h0.y() * h1.y()) / (h0.z() * h1.z());
    const double w = image_.width;
    if (!std::isfinite(f2) || f2 < 0.04 * w * w || f2 > 25.0 * w * w) return std::nullopt;
    const double f = std::sqrt(f2);
    Eigen::Matrix3d m = hm;
    m.row(0) /= f;
    m.row(1) /= f;
    double lambda = 1.0 / m.col(0).norm();
    if (m(2, 2) < 0.0) lambda = -lambda;  // wall in front of the camera
    const double r = m.col(1).norm() / m.col(0).norm();
    Eigen::Matrix3d rot;
    rot.col(0) = lambda * m.col(0);
    rot.col(1) = (lambda / r) * m.col(1);
    rot.col(2) = rot.col(0).cross(rot.col(1));
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
    if (rot.determinant() < 0.0) return std::nullopt;
    FitParams p;
    p << r, f, axis_angle_from_rotation(rot), lambda * m.col(2);
    if (!p.allFinite()) return std::nullopt;
    return p;
  }

  FitParams initial_guess() const {
    if (!opt_.homography_init) return frontal_guess();
    return homography_guess().value_or(frontal_guess());
  }

  Eigen::VectorXd residuals(const FitParams& p) const {
    Eigen::VectorXd res(residual_count());
    const double r = p[0], f = p[1];
    const double cx = 0.5 * image_.width, cy = 0.5 * image_.height;
    const Eigen::Matrix3d rot = rotation_from_axis_angle(p.segment<3>(2));
    const Vec3 t = p.segment<3>(5);
    if (!(r > 0.0) || !(f > 0.0)) {
      res.setConstant(kInvalid);
      return res;
    }
    std::array<Vec3, 4> cc;
    for (int id = 1; id <= 4; ++id) {
      cc[static_cast<std::size_t>(id - 1)] = rot * corner(id, r) + t;
      if (!(cc[static_cast<std::size_t>(id - 1)].z() > 1e-9)) {
        res.setConstant(kInvalid);
        return res;
      }
    }
    int i = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      res[i++] = f * cc[c].x() / cc[c].z() + cx - kp_[c].x();
      res[i++] = f * cc[c].y() / cc[c].z() + cy - kp_[c].y();
    }
    if (opt_.edge_residual == EdgeResidual::Sampled) {
      sampled_edge_residuals(res, i, cc, rot, f);
      res[i++] = opt_.focal_prior_weight * (f - focal_prior_) / focal_prior_;
      return res;
    }
    // The edge from corner c towards the camera projects onto the image
    // line through the corner's image and the vanishing point of the box z
    // axis (both in homogeneous pixel coordinates).
    auto homogeneous = [&](const Vec3& x) {
      return Eigen::Vector3d(f * x.x() + cx * x.z(), f * x.y() + cy * x.z(), x.z());
    };
    const Eigen::Vector3d vanishing = homogeneous(rot.col(2));
    for (std::size_t e = 0; e < 4; ++e) {
      const Eigen::Vector3d l = homogeneous(cc[e]).cross(vanishing);
      const double n = std::hypot(l[0], l[1]);
      if (!(n > 0.0)) {
        res.setConstant(kInvalid);
        return res;
      }
      res[i++] = (l[0] * kp_[e + 4].x() + l[1] * kp_[e + 4].y() + l[2]) / n;
    }
    res[i++] = opt_.focal_prior_weight * (f - focal_prior_) / focal_prior_;
    return res;
  }

  /// Forward-difference Jacobian with step jacobian_step * max(1, |p_i|).
  Eigen::MatrixXd jacobian(const FitParams& p, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd j(residual_count(), 8);
    for (int c = 0; c < 8; ++c) {
      FitParams q = p;
      const double h = opt_.jacobian_step * std::max(1.0, std::abs(p[c]));
      q[c] += h;
      j.col(c) = (residuals(q) - r0) / h;
    }
    return j;
  }

  Eigen::MatrixXd jacobian(const FitParams& p) const { return jacobian(p, residuals(p)); }

  double pixel_rms(const Eigen::VectorXd& res) const {
    const int n = pixel_residual_count();
    return std::sqrt(res.head(n).squaredNorm() / n);
  }

  static constexpr double kInvalid = 1e6;

 private:
  // Points on the edge a + s * (0, 0, -1) map to cc - s * rot.col(2). The
  // depth used for normalization is floored at a tenth of the corner depth
  // so that samples behind the camera stay finite.
  void sampled_edge_residuals(Eigen::VectorXd& res, int& i, const std::array<Vec3, 4>& cc,
                              const Eigen::Matrix3d& rot, double f) const {
    const double cx = 0.5 * image_.width, cy = 0.5 * image_.height;
    const Vec3 back = -rot.col(2);
    const int m = opt_.samples_per_edge;
    for (std::size_t e = 0; e < 4; ++e) {
      const Eigen::Vector3d& l = lines_[e];
      const double z_floor = 0.1 * cc[e].z();
      for (int s = 1; s <= m; ++s) {
        const Vec3 x = cc[e] + (static_cast<double>(s) / m) * back;
        const double num = l[0] * (f * x.x() + cx * x.z()) + l[1] * (f * x.y() + cy * x.z()) + l[2] * x.z();
        res[i++] = num / std::max(x.z(), z_floor);
      }
    }
  }

  ImageSize image_;
  FitOptions opt_;
  std::array<Vec2, 8> kp_;
  std::array<Eigen::Vector3d, 4> lines_;
  double focal_prior_ = 1.0;
};

namespace detail {

inline CameraFit run_lm(const CuboidFitProblem& prob, FitParams p, const FitOptions& opt, ImageSize image) {
  CameraFit fit;
  fit.image = image;
  Eigen::VectorXd res = prob.residuals(p);
  double cost = 0.5 * res.squaredNorm();
  double mu = opt.initial_damping;
  int it = 0;
  bool converged = false;
  Eigen::MatrixXd jac;
  while (it < opt.max_iterations && !converged) {
    ++it;
    jac = prob.jacobian(p, res);
    const Eigen::Matrix<double, 8, 8> a = jac.transpose() * jac;
    const FitParams g = jac.transpose() * res;
    if (cost < 1e-28) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix<double, 8, 8> damped = a;
      for (int k = 0; k < 8; ++k) damped(k, k) += mu * std::max(a(k, k), 1e-12);
      const FitParams step = damped.partialPivLu().solve(-g);
      if (!step.allFinite() || step.norm() < opt.step_tolerance * (p.norm() + opt.step_tolerance)) {
        converged = true;
        break;
      }
      const FitParams trial = p + step;
      const Eigen::VectorXd trial_res = prob.residuals(trial);
      const double trial_cost = 0.5 * trial_res.squaredNorm();
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        p = trial;
        res = trial_res;
        cost = trial_cost;
        mu = std::max(mu / opt.damping_down, 1e-15);
        accepted = true;
        if (rel < opt.relative_cost_tolerance) converged = true;
      } else {
        mu *= opt.damping_up;
        if (mu > 1e20) {
          converged = true;
          break;
        }
      }
    }
  }

  fit.r = p[0];
  fit.f = p[1];
  fit.rotation = p.segment<3>(2);
  fit.translation = p.segment<3>(5);
  fit.rms_residual = prob.pixel_rms(res);
  fit.converged = converged;
  fit.iterations = it;

  // Conditioning of the column-normalized normal equations.
  jac = prob.jacobian(p, res);
  Eigen::MatrixXd js = jac;
  for (int c = 0; c < 8; ++c) {
    const double n = js.col(c).norm();
    if (n > 0) js.col(c) /= n;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(js.transpose() * js);
  const double lo = std::max(eig.eigenvalues().minCoeff(), 0.0);
  const double hi = eig.eigenvalues().maxCoeff();
  fit.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  fit.degenerate = fit.condition > opt.degeneracy_condition;
  return fit;
}

}  // namespace detail

/// Fits box proportions, focal length and camera pose to a type 0 layout.
/// Non-convergence is reported through `converged`, not thrown.
inline CameraFit fit_camera_and_box(const KeypointSet& kps, ImageSize image_size, const FitOptions& opt = {}) {
  const CuboidFitProblem prob(kps, image_size, opt);
  CameraFit fit = detail::run_lm(prob, prob.initial_guess(), opt, image_size);
  if (!fit.converged || fit.rms_residual > 1.0) {
    // Restart from rotated frontal poses when the first start stalls; the
    // lowest residual wins even if its run hit the iteration cap.
    for (double yaw : {-0.5, 0.0, 0.5}) {
      for (double pitch : {-0.3, 0.0, 0.3}) {
        FitParams p = prob.frontal_guess();
        p.segment<3>(2) = axis_angle_from_rotation(
            (Eigen::AngleAxisd(pitch, Vec3::UnitX()) * Eigen::AngleAxisd(yaw, Vec3::UnitY())).toRotationMatrix());
        CameraFit alt = detail::run_lm(prob, p, opt, image_size);
        alt.iterations += fit.iterations;
        if (alt.rms_residual < fit.rms_residual) fit = alt;
      }
    }
  }
  return fit;
}

struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // camera-frame z, row-major
  double min = 0.0;
  double max = 0.0;
  std::size_t filled_from_neighbor = 0;

  double at(int x, int y) const {
    return depth[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

/// Plane (normal n, offset c with n.x = c) of a layout region in the box
/// frame.
inline std::optional<std::pair<Vec3, double>> region_plane(SemanticLabel label, double r) {
  switch (label) {
    case SemanticLabel::CenterWall: return std::make_pair(Vec3(0, 0, 1), 0.0);
    case SemanticLabel::LeftWall: return std::make_pair(Vec3(1, 0, 0), 0.0);
    case SemanticLabel::RightWall: return std::make_pair(Vec3(1, 0, 0), 1.0);
    case SemanticLabel::Ceiling: return std::make_pair(Vec3(0, 1, 0), 0.0);
    case SemanticLabel::Floor: return std::make_pair(Vec3(0, 1, 0), r);
    default: return std::nullopt;
  }
}

/// Depth of every pixel of `labels` under the fitted camera and box. Pixels
/// whose ray misses its region plane take the value of the nearest valid
/// pixel (4-connected breadth-first fill).
inline DepthMap render_depth(const CameraFit& fit, const SegMask& labels) {
  const PinholeCamera cam = fit.camera_for(labels.size());
  const Vec3 origin = cam.center();
  DepthMap d;
  d.width = labels.width();
  d.height = labels.height();
  d.depth.assign(labels.pixel_count(), std::numeric_limits<double>::quiet_NaN());
  std::deque<std::size_t> frontier;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(d.width) + static_cast<std::size_t>(x);
      const auto plane = region_plane(labels.at(x, y), fit.r);
      if (!plane) continue;
      const Vec3 dir = cam.ray_direction(x + 0.5, y + 0.5);
      const double denom = plane->first.dot(dir);
      if (std::abs(denom) < 1e-12) continue;
      const double lambda = (plane->second - plane->first.dot(origin)) / denom;
      if (!(lambda > 0.0) || !std::isfinite(lambda)) continue;
      d.depth[idx] = lambda;
      frontier.push_back(idx);
    }
  }
  if (frontier.empty()) throw ComputationError("no pixel ray meets its region plane");
  std::size_t missing = 0;
  for (double v : d.depth) missing += std::isnan(v) ? 1 : 0;
  d.filled_from_neighbor = missing;
  while (missing > 0 && !frontier.empty()) {
    const std::size_t idx = frontier.front();
    frontier.pop_front();
    const int x = static_cast<int>(idx % static_cast<std::size_t>(d.width));
    const int y = static_cast<int>(idx / static_cast<std::size_t>(d.width));
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= d.width || ny[k] >= d.height) continue;
      const std::size_t n = static_cast<std::size_t>(ny[k]) * static_cast<std::size_t>(d.width) + static_cast<std::size_t>(nx[k]);
      if (!std::isnan(d.depth[n])) continue;
      d.depth[n] = d.depth[idx];
      --missing;
      frontier.push_back(n);
    }
  }
  d.min = *std::min_element(d.depth.begin(), d.depth.end());
  d.max = *std::max_element(d.depth.begin(), d.depth.end());
  return d;
}

inline DepthMap render_depth(const CameraFit& fit, const Layout& layout, ImageSize size) {
  if (layout.group != Group::A) throw ValidationError("depth rendering needs a group A layout");
  return render_depth(fit, rasterize(layout, size));
}

}  // namespace roomlayout
