#include <gtest/gtest.h>

#include <cmath>

#include "roomlayout/layout.hpp"
#include "roomlayout/synth.hpp"

using namespace roomlayout;

namespace {

KeypointSet kps(Group g, ImageSize frame, std::vector<Keypoint> pts) {
  KeypointSet k;
  k.group = g;
  k.frame = frame;
  k.points = std::move(pts);
  k.sort();
  return k;
}

// Frontoparallel box: center wall [100,220]x[100,220] on 320x320.
KeypointSet box_type0() {
  return kps(Group::A, {320, 320},
             {{1, 100, 100}, {2, 220, 100}, {3, 100, 220}, {4, 220, 220},
              {5, 0, 0}, {6, 320, 0}, {7, 0, 320}, {8, 320, 320}});
}

double fraction(const SegMask& m, SemanticLabel l) {
  return static_cast<double>(m.histogram()[label_code(l)]) / static_cast<double>(m.pixel_count());
}

}  // namespace

TEST(LayoutBuilder, GroupCWithoutChainsIsOneWall) {
  const Layout l = build_layout(Group::C, kps(Group::C, {320, 320}, {}), false, false, {320, 320});
  EXPECT_FALSE(l.ceiling);
  EXPECT_FALSE(l.floor);
  EXPECT_EQ(l.region_count(), 1);
  EXPECT_DOUBLE_EQ(fraction(rasterize(l), SemanticLabel::CenterWall), 1.0);
  EXPECT_TRUE(edges_of_layout(l).empty());
}

TEST(LayoutBuilder, GroupCHorizontalChainsAreaFractions) {
  const Layout l = build_layout(
      Group::C, kps(Group::C, {320, 320}, {{1, 0, 80}, {2, 320, 80}, {3, 0, 240}, {4, 320, 240}}), true, true,
      {320, 320});
  ASSERT_TRUE(l.ceiling && l.floor);
  const SegMask m = rasterize(l);
  EXPECT_DOUBLE_EQ(fraction(m, SemanticLabel::Ceiling), 0.25);
  EXPECT_DOUBLE_EQ(fraction(m, SemanticLabel::CenterWall), 0.5);
  EXPECT_DOUBLE_EQ(fraction(m, SemanticLabel::Floor), 0.25);
}

TEST(LayoutBuilder, Type0BoxLabelsAndEdges) {
  const Layout l = build_layout(Group::A, box_type0(), true, true, {320, 320});
  const SegMask m = rasterize(l);
  EXPECT_EQ(m.at(160, 160), SemanticLabel::CenterWall);
  EXPECT_EQ(m.at(160, 20), SemanticLabel::Ceiling);
  EXPECT_EQ(m.at(160, 300), SemanticLabel::Floor);
  EXPECT_EQ(m.at(20, 160), SemanticLabel::LeftWall);
  EXPECT_EQ(m.at(300, 160), SemanticLabel::RightWall);
  // Center wall: 120x120 pixel centers strictly inside.
  EXPECT_EQ(m.histogram()[label_code(SemanticLabel::CenterWall)], 120u * 120u);

  const auto edges = edges_of_layout(l);
  EXPECT_EQ(edges.size(), 8u);
  int ceiling = 0, floor = 0, vertical = 0;
  for (const auto& e : edges) {
    ceiling += e.first == SemanticLabel::Ceiling;
    floor += e.second == SemanticLabel::Floor;
    vertical += e.first != SemanticLabel::Ceiling && e.second != SemanticLabel::Floor;
  }
  EXPECT_EQ(ceiling, 3);
  EXPECT_EQ(floor, 3);
  EXPECT_EQ(vertical, 2);
}

TEST(LayoutBuilder, Type10SplitsAtBoundary) {
  const Layout l =
      build_layout(Group::B, kps(Group::B, {100, 50}, {{1, 40, 0}, {2, 60, 50}}), false, false, {100, 50});
  const SegMask m = rasterize(l);
  EXPECT_EQ(m.at(10, 25), SemanticLabel::LeftWall);
  EXPECT_EQ(m.at(90, 25), SemanticLabel::CenterWall);
  // boundary x at row 25 (y=25.5) is 40 + 20*25.5/50 = 50.2
  EXPECT_EQ(m.at(49, 25), SemanticLabel::LeftWall);
  EXPECT_EQ(m.at(50, 25), SemanticLabel::CenterWall);
  const Layout cr = build_layout(Group::B, l.keypoints, false, false, {100, 50}, GroupBWallMapping::CenterRight);
  EXPECT_EQ(rasterize(cr).at(90, 25), SemanticLabel::RightWall);
}

TEST(LayoutBuilder, PartitionSumsToImageArea) {
  const Layout l = build_layout(Group::A, box_type0(), true, true, {320, 320});
  for (ImageSize s : {ImageSize{320, 320}, ImageSize{97, 61}, ImageSize{640, 480}}) {
    const SegMask m = rasterize(l, s);
    const auto h = m.histogram();
    std::size_t sum = 0;
    for (auto c : h) sum += c;
    EXPECT_EQ(sum, s.area());
    EXPECT_EQ(h[0], 0u);
  }
}

TEST(LayoutBuilder, MissingAndUnexpectedIds) {
  auto k = box_type0();
  k.points.erase(k.points.begin() + 5);  // id 6
  try {
    build_layout(Group::A, k, true, true, {320, 320});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing keypoint id 6"), std::string::npos);
  }
  try {
    build_layout(Group::A, box_type0(), true, false, {320, 320});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unexpected keypoint id 5"), std::string::npos);
  }
}

TEST(LayoutBuilder, OutsideToleranceIsTenPercent) {
  auto near = kps(Group::C, {320, 320}, {{1, -31, 80}, {2, 351, 80}});
  EXPECT_NO_THROW(build_layout(Group::C, near, false, true, {320, 320}));
  auto far = kps(Group::C, {320, 320}, {{1, -33, 80}, {2, 320, 80}});
  EXPECT_THROW(build_layout(Group::C, far, false, true, {320, 320}), ValidationError);
}

TEST(LayoutBuilder, NonMonotoneChainRejected) {
  auto k = kps(Group::C, {320, 320}, {{1, 200, 80}, {2, 100, 80}});
  EXPECT_THROW(build_layout(Group::C, k, false, true, {320, 320}), ValidationError);
}

TEST(LayoutBuilder, CrossingChainsRejected) {
  auto k = kps(Group::C, {320, 320}, {{1, 0, 200}, {2, 320, 200}, {3, 0, 100}, {4, 320, 100}});
  EXPECT_THROW(build_layout(Group::C, k, true, true, {320, 320}), ValidationError);
}

TEST(LayoutBuilder, SyntheticScenesAgreeWithAnalyticMask) {
  for (int t = 0; t < kRoomTypeCount; ++t) {
    for (int i = 0; i < 5; ++i) {
      SceneRanges r;
      r.room_type = RoomType{t};
      const auto gt = scene_to_groundtruth(sample_scene(rng::derive_seed(100 + t, i), r));
      const Layout l = build_layout(gt.group, gt.keypoints, gt.floor_present, gt.ceiling_present, gt.mask.size());
      const SegMask m = rasterize(l);
      std::size_t agree = 0;
      for (std::size_t p = 0; p < m.pixel_count(); ++p) agree += m.codes()[p] == gt.mask.codes()[p];
      EXPECT_GE(static_cast<double>(agree) / m.pixel_count(), 0.995) << "type " << t << " scene " << i;
    }
  }
}

TEST(LayoutBuilder, ChainsMatchAnalyticBoundaries) {
  // Per column, the analytic ceiling (floor) pixel count locates the true
  // boundary to half a pixel; compare with the chain height.
  double sq = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < 60; ++i) {
    SceneRanges r;
    r.room_type = RoomType{i % kRoomTypeCount};
    const auto gt = scene_to_groundtruth(sample_scene(rng::derive_seed(777, i), r));
    const Layout l = build_layout(gt.group, gt.keypoints, gt.floor_present, gt.ceiling_present, gt.mask.size());
    const int w = gt.mask.width(), h = gt.mask.height();
    for (int x = 0; x < w; ++x) {
      int nc = 0, nf = 0;
      for (int y = 0; y < h; ++y) {
        nc += gt.mask.at(x, y) == SemanticLabel::Ceiling;
        nf += gt.mask.at(x, y) == SemanticLabel::Floor;
      }
      if (l.ceiling && nc > 0 && nc < h) {
        const double y = std::clamp(l.ceiling->y_at(x + 0.5), 0.0, static_cast<double>(h));
        sq += (y - nc) * (y - nc);
        ++n;
      }
      if (l.floor && nf > 0 && nf < h) {
        const double y = std::clamp(l.floor->y_at(x + 0.5), 0.0, static_cast<double>(h));
        sq += (y - (h - nf)) * (y - (h - nf));
        ++n;
      }
    }
  }
  ASSERT_GT(n, 0u);
  EXPECT_LT(std::sqrt(sq / n), 0.5);
}

TEST(LayoutBuilder, EdgeEndpointsInsideImage) {
  for (int i = 0; i < 40; ++i) {
    SceneRanges r;
    r.room_type = RoomType{i % kRoomTypeCount};
    const auto gt = scene_to_groundtruth(sample_scene(rng::derive_seed(4242, i), r));
    const Layout l = build_layout(gt.group, gt.keypoints, gt.floor_present, gt.ceiling_present, gt.mask.size());
    for (const auto& e : edges_of_layout(l))
      for (const Vec2& p : {e.segment.a, e.segment.b}) {
        EXPECT_GE(p.x(), -1e-9);
        EXPECT_LE(p.x(), 320 + 1e-9);
        EXPECT_GE(p.y(), -1e-9);
        EXPECT_LE(p.y(), 320 + 1e-9);
      }
  }
}

TEST(LayoutBuilder, RasterizeAtOtherSizeRescales) {
  const Layout l = build_layout(Group::A, box_type0(), true, true, {320, 320});
  const SegMask small = rasterize(l, {80, 80});
  EXPECT_EQ(small.at(40, 40), SemanticLabel::CenterWall);
  EXPECT_EQ(small.histogram()[label_code(SemanticLabel::CenterWall)], 30u * 30u);
}
