#pragma once

// Hypothesis scoring and selection.
//
// Each of the three wall-count groups contributes a segmentation and a
// keypoint heatmap stack. A group's layout is built from its decoded
// keypoints (using the floor/ceiling visibility found in its own
// segmentation), rasterized and compared with that same segmentation:
//
//   total = matching_regions + lambda * mean_iou
//
// where a region matches when its IoU exceeds the threshold, and the mean
// runs over every label present in either mask. matching_regions is not
// normalized, so layouts that explain more regions are preferred.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomlayout/core_model.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/layout.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout {

inline constexpr double kDefaultLambda = 1.0;
inline constexpr double kDefaultIouThreshold = 0.8;
inline constexpr double kDefaultPresenceTau = 0.01;

struct HypothesisConfig {
  double lambda = kDefaultLambda;
  double iou_threshold = kDefaultIouThreshold;
  double presence_tau = kDefaultPresenceTau;
  double min_confidence = kDefaultMinConfidence;
  GroupBWallMapping b_mapping = GroupBWallMapping::LeftCenter;
};

struct HypothesisScore {
  int matching_regions = 0;
  double mean_iou = 0.0;
  double lambda = kDefaultLambda;
  double total = 0.0;
  /// IoU per label code; nullopt for labels absent from both masks.
  std::array<std::optional<double>, kLabelCount> iou{};

  friend bool operator==(const HypothesisScore&, const HypothesisScore&) = default;
};

inline bool detect_presence(const SegMask& seg, SemanticLabel label, double tau = kDefaultPresenceTau) {
  if (label != SemanticLabel::Floor && label != SemanticLabel::Ceiling)
    throw ValidationError("presence detection is defined for floor and ceiling only");
  if (!(tau >= 0.0 && tau < 1.0)) throw ValidationError("presence threshold must lie in [0,1)");
  const auto hist = seg.histogram();
  const std::size_t valid = seg.pixel_count() - hist[0];
  if (valid == 0) throw ValidationError("segmentation contains only void pixels");
  return static_cast<double>(hist[label_code(label)]) >= tau * static_cast<double>(valid);
}

namespace detail {

struct Overlap {
  std::array<std::size_t, kLabelCount> in_a{};
  std::array<std::size_t, kLabelCount> in_b{};
  std::array<std::size_t, kLabelCount> both{};
};

inline Overlap overlap(const SegMask& a, const SegMask& b) {
  if (a.size() != b.size())
    throw ValidationError("mask size mismatch: " + to_string(a.size()) + " vs " + to_string(b.size()));
  Overlap o;
  const auto& ca = a.codes();
  const auto& cb = b.codes();
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const std::uint8_t x = ca[i] < kLabelCount ? ca[i] : 0;
    const std::uint8_t y = cb[i] < kLabelCount ? cb[i] : 0;
    ++o.in_a[x];
    ++o.in_b[y];
    if (x == y) ++o.both[x];
  }
  return o;
}

inline std::optional<double> iou_of(const Overlap& o, std::size_t l) {
  const std::size_t uni = o.in_a[l] + o.in_b[l] - o.both[l];
  if (uni == 0) return std::nullopt;
  return static_cast<double>(o.both[l]) / static_cast<double>(uni);
}

}  // namespace detail

/// IoU of one label between two masks; nullopt when the label is absent
/// from both.
inline std::optional<double> region_iou(const SegMask& a, const SegMask& b, SemanticLabel label) {
  return detail::iou_of(detail::overlap(a, b), label_code(label));
}

inline HypothesisScore score(const SegMask& layout_mask, const SegMask& seg, double lambda = kDefaultLambda,
                             double theta = kDefaultIouThreshold) {
  if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("IoU threshold must lie in (0,1)");
  const auto o = detail::overlap(layout_mask, seg);
  HypothesisScore s;
  s.lambda = lambda;
  double sum = 0.0;
  int considered = 0;
  for (std::size_t l = 1; l < kLabelCount; ++l) {
    s.iou[l] = detail::iou_of(o, l);
    if (!s.iou[l]) continue;
    ++considered;
    sum += *s.iou[l];
    if (*s.iou[l] > theta) ++s.matching_regions;
  }
  if (considered == 0) throw ValidationError("no labelled regions in either mask");
  s.mean_iou = sum / considered;
  s.total = s.matching_regions + lambda * s.mean_iou;
  return s;
}

struct HypothesisInput {
  Group group = Group::A;
  SegMask segmentation;
  Heatmap heatmaps;
};

struct HypothesisOutcome {
  Group group = Group::A;
  bool floor_present = false;
  bool ceiling_present = false;
  /// Layout in the segmentation frame, when construction succeeded.
  std::optional<Layout> layout;
  SegMask layout_mask;
  std::optional<HypothesisScore> score;
  std::string failure;

  bool ok() const { return score.has_value(); }
  double total() const { return score ? score->total : -std::numeric_limits<double>::infinity(); }
};

struct SelectionResult {
  Group chosen = Group::A;
  ImageSize image;
  /// Indexed by group (A, B, C).
  std::array<HypothesisOutcome, 3> hypotheses;
  /// Chosen layout in the original image frame.
  Layout layout;

  const HypothesisOutcome& outcome(Group g) const { return hypotheses[static_cast<std::size_t>(g)]; }
};

/// Presence detection, decoding, layout construction, rasterization and
/// scoring for one hypothesis. Failures are reported in the outcome.
inline HypothesisOutcome evaluate_hypothesis(const HypothesisInput& in, const HypothesisConfig& cfg) {
  HypothesisOutcome out;
  out.group = in.group;
  try {
    if (in.heatmaps.group != in.group) throw ValidationError("heatmap group does not match hypothesis group");
    out.floor_present = detect_presence(in.segmentation, SemanticLabel::Floor, cfg.presence_tau);
    out.ceiling_present = detect_presence(in.segmentation, SemanticLabel::Ceiling, cfg.presence_tau);

    if (!type_of_layout(in.group, out.floor_present, out.ceiling_present))
      throw ComputationError(std::string("no group ") + group_tag(in.group) +
                             " room type without floor and ceiling");

    const KeypointSet decoded = decode(in.heatmaps, cfg.min_confidence);
    KeypointSet used;
    used.group = in.group;
    used.frame = decoded.frame;
    for (int id : required_keypoint_ids(in.group, out.floor_present, out.ceiling_present)) {
      const Keypoint* k = decoded.find(id);
      if (!k) throw ComputationError("keypoint " + std::to_string(id) + " not detected");
      used.points.push_back(*k);
    }
    out.layout = build_layout(in.group, rescale_keypoints(used, in.segmentation.size()), out.floor_present,
                              out.ceiling_present, in.segmentation.size(), cfg.b_mapping);
    out.layout_mask = rasterize(*out.layout);
    out.score = score(out.layout_mask, in.segmentation, cfg.lambda, cfg.iou_threshold);
  } catch (const std::exception& e) {
    out.layout.reset();
    out.score.reset();
    out.failure = e.what();
  }
  return out;
}

/// Group with the highest total (indexed A, B, C; nullopt = failed). Exact
/// ties go to the group with fewer walls.
inline std::optional<Group> choose_group(const std::array<std::optional<double>, 3>& totals) {
  std::optional<Group> best;
  for (Group g : {Group::C, Group::B, Group::A}) {
    const auto& t = totals[static_cast<std::size_t>(g)];
    if (!t) continue;
    if (!best || *t > *totals[static_cast<std::size_t>(*best)]) best = g;
  }
  return best;
}

/// Evaluates all three hypotheses and picks the highest total score. Exact
/// ties go to the group with fewer walls. Failed hypotheses score -inf.
inline SelectionResult select(std::span<const HypothesisInput> inputs, ImageSize image_size,
                              const HypothesisConfig& cfg = {}) {
  if (image_size.empty()) throw ValidationError("image size must be positive");
  std::array<const HypothesisInput*, 3> by_group{};
  for (const auto& in : inputs) {
    auto& slot = by_group[static_cast<std::size_t>(in.group)];
    if (slot) throw ValidationError(std::string("duplicate hypothesis ") + group_tag(in.group));
    slot = &in;
  }
  for (Group g : kAllGroups)
    if (!by_group[static_cast<std::size_t>(g)])
      throw ValidationError(std::string("hypothesis ") + group_tag(g) + " absent");

  SelectionResult r;
  r.image = image_size;
  for (Group g : kAllGroups)
    r.hypotheses[static_cast<std::size_t>(g)] = evaluate_hypothesis(*by_group[static_cast<std::size_t>(g)], cfg);

  std::array<std::optional<double>, 3> totals;
  for (Group g : kAllGroups)
    if (r.outcome(g).ok()) totals[static_cast<std::size_t>(g)] = r.outcome(g).total();
  const auto best = choose_group(totals);
  if (!best) {
    std::string why = "all hypotheses failed:";
    for (const auto& h : r.hypotheses) why += std::string(" ") + group_tag(h.group) + ": " + h.failure + ";";
    throw ComputationError(why);
  }
  r.chosen = *best;
  const auto& h = r.outcome(*best);
  r.layout = build_layout(h.group, rescale_keypoints(h.layout->keypoints, image_size), h.floor_present,
                          h.ceiling_present, image_size, cfg.b_mapping);
  return r;
}

}  // namespace roomlayout
