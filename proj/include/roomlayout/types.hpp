#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"

namespace roomlayout {

struct ImageSize {
  int width = 0;
  int height = 0;

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  double diagonal() const { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }
  friend bool operator==(ImageSize, ImageSize) = default;
};

inline std::string to_string(ImageSize s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

struct Keypoint {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Keypoints of one layout in a stated pixel frame, sorted by id.
struct KeypointSet {
  Group group = Group::A;
  ImageSize frame;
  std::vector<Keypoint> points;

  const Keypoint* find(int id) const {
    auto it = std::find_if(points.begin(), points.end(), [id](const Keypoint& k) { return k.id == id; });
    return it == points.end() ? nullptr : &*it;
  }

  std::vector<int> ids() const {
    std::vector<int> out;
    out.reserve(points.size());
    for (const auto& k : points) out.push_back(k.id);
    return out;
  }

  /// Throws unless ids are strictly increasing, belong to the group
  /// prototype and all coordinates are finite.
  void validate() const {
    const int n = group_info(group).prototype_keypoint_count;
    int last = 0;
    for (const auto& k : points) {
      if (k.id < 1 || k.id > n)
        throw ValidationError("keypoint id " + std::to_string(k.id) + " is not a group " +
                              group_tag(group) + " prototype id");
      if (k.id <= last) throw ValidationError("keypoint ids must be strictly increasing");
      if (!std::isfinite(k.x) || !std::isfinite(k.y))
        throw ValidationError("keypoint " + std::to_string(k.id) + " has non-finite coordinates");
      last = k.id;
    }
  }

  void sort() {
    std::sort(points.begin(), points.end(), [](const Keypoint& a, const Keypoint& b) { return a.id < b.id; });
  }

  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

/// Per-pixel semantic label codes (see SemanticLabel), row-major.
class SegMask {
 public:
  SegMask() = default;
  SegMask(int width, int height, SemanticLabel fill = SemanticLabel::Void)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw ValidationError("mask size must be positive");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), label_code(fill));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {width_, height_}; }
  std::size_t pixel_count() const { return data_.size(); }

  std::uint8_t code(int x, int y) const { return data_[index(x, y)]; }
  SemanticLabel at(int x, int y) const { return static_cast<SemanticLabel>(data_[index(x, y)]); }
  void set(int x, int y, SemanticLabel l) { data_[index(x, y)] = label_code(l); }

  const std::vector<std::uint8_t>& codes() const { return data_; }
  std::vector<std::uint8_t>& codes() { return data_; }

  /// Pixel counts per label code 0..5.
  std::array<std::size_t, kLabelCount> histogram() const {
    std::array<std::size_t, kLabelCount> h{};
    for (auto c : data_) ++h[c < kLabelCount ? c : 0];
    return h;
  }

  void validate_codes() const {
    for (auto c : data_)
      if (c >= kLabelCount) throw ValidationError("mask contains invalid label code " + std::to_string(c));
  }

  friend bool operator==(const SegMask&, const SegMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace roomlayout
