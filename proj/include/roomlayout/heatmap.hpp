#pragma once

// Keypoint <-> Gaussian heatmap conversion.
//
// Heatmap pixel (i, j) sits at continuous coordinate (i, j) of the heatmap
// frame; a keypoint at (x, y) in a W x H frame maps to
// (x * w / W, y * h / H) on a w x h heatmap.

#include <cmath>
#include <cstddef>
#include <vector>

#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

inline constexpr double kDefaultSigma = 2.0;
inline constexpr double kDefaultMinConfidence = 0.2;
inline constexpr ImageSize kDefaultHeatmapSize{80, 80};

struct Heatmap {
  Group group = Group::A;
  int width = 0;
  int height = 0;
  double sigma = kDefaultSigma;
  /// One channel per prototype id; channels[id - 1] is row-major width x height.
  std::vector<std::vector<float>> channels;

  ImageSize size() const { return {width, height}; }

  float at(int id, int x, int y) const {
    return channels[static_cast<std::size_t>(id - 1)]
                   [static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("heatmap size must be positive");
    const auto n = static_cast<std::size_t>(group_info(group).prototype_keypoint_count);
    if (channels.size() != n)
      throw ValidationError("heatmap has " + std::to_string(channels.size()) + " channels, group " +
                            group_tag(group) + " needs " + std::to_string(n));
    for (const auto& c : channels) {
      if (c.size() != size().area()) throw ValidationError("heatmap channel size mismatch");
      for (float v : c)
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
          throw ValidationError("heatmap values must be finite and within [0,1]");
    }
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

/// Scales coordinates into a new frame; ids and confidences are kept.
inline KeypointSet rescale_keypoints(const KeypointSet& kps, ImageSize to) {
  if (to.empty()) throw ValidationError("rescale target size must be positive");
  if (kps.frame.empty()) throw ValidationError("keypoint frame size must be positive");
  const double sx = static_cast<double>(to.width) / kps.frame.width;
  const double sy = static_cast<double>(to.height) / kps.frame.height;
  KeypointSet out = kps;
  out.frame = to;
  for (auto& k : out.points) {
    k.x *= sx;
    k.y *= sy;
  }
  return out;
}

/// Renders each keypoint as an unnormalized Gaussian with peak 1 on its
/// channel. Channels of absent ids stay zero.
inline Heatmap encode(const KeypointSet& kps, ImageSize res = kDefaultHeatmapSize,
                      double sigma = kDefaultSigma) {
  if (res.empty()) throw ValidationError("heatmap resolution must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
  if (kps.frame.empty()) throw ValidationError("keypoint frame size must be positive");
  kps.validate();

  Heatmap h;
  h.group = kps.group;
  h.width = res.width;
  h.height = res.height;
  h.sigma = sigma;
  h.channels.assign(static_cast<std::size_t>(group_info(kps.group).prototype_keypoint_count),
                    std::vector<float>(res.area(), 0.0f));

  constexpr double tol = 1e-9;
  const double sx = static_cast<double>(res.width) / kps.frame.width;
  const double sy = static_cast<double>(res.height) / kps.frame.height;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> gx(static_cast<std::size_t>(res.width));
  std::vector<double> gy(static_cast<std::size_t>(res.height));
  for (const auto& k : kps.points) {
    if (k.x < -tol || k.y < -tol || k.x > kps.frame.width + tol || k.y > kps.frame.height + tol)
      throw ValidationError("keypoint " + std::to_string(k.id) + " lies outside its frame");
    const double cx = k.x * sx;
    const double cy = k.y * sy;
    // The Gaussian is separable.
    for (int i = 0; i < res.width; ++i) gx[static_cast<std::size_t>(i)] = std::exp(-(i - cx) * (i - cx) * inv2s2);
    for (int j = 0; j < res.height; ++j) gy[static_cast<std::size_t>(j)] = std::exp(-(j - cy) * (j - cy) * inv2s2);
    auto& ch = h.channels[static_cast<std::size_t>(k.id - 1)];
    for (int j = 0; j < res.height; ++j)
      for (int i = 0; i < res.width; ++i)
        ch[static_cast<std::size_t>(j) * static_cast<std::size_t>(res.width) + static_cast<std::size_t>(i)] =
            static_cast<float>(gx[static_cast<std::size_t>(i)] * gy[static_cast<std::size_t>(j)]);
  }
  return h;
}

/// Per channel: argmax (first maximum in row-major order), refined by the
/// intensity-weighted centroid of its in-bounds 3x3 neighbourhood.
/// Channels whose peak is below `min_conf` are omitted. The result is in
/// the heatmap frame.
inline KeypointSet decode(const Heatmap& h, double min_conf = kDefaultMinConfidence) {
  h.validate();
  KeypointSet out;
  out.group = h.group;
  out.frame = h.size();
  const auto w = static_cast<std::size_t>(h.width);
  for (std::size_t c = 0; c < h.channels.size(); ++c) {
    const auto& ch = h.channels[c];
    std::size_t best = 0;
    for (std::size_t p = 1; p < ch.size(); ++p)
      if (ch[p] > ch[best]) best = p;
    const double peak = ch[best];
    if (peak < min_conf || peak <= 0.0) continue;

    const int bx = static_cast<int>(best % w);
    const int by = static_cast<int>(best / w);
    double sw = 0.0, sxw = 0.0, syw = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = bx + dx, y = by + dy;
        if (x < 0 || y < 0 || x >= h.width || y >= h.height) continue;
        const double v = ch[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
        sw += v;
        sxw += v * x;
        syw += v * y;
      }
    }
    out.points.push_back({static_cast<int>(c) + 1, sxw / sw, syw / sw, peak});
  }
  return out;
}

}  // namespace roomlayout
