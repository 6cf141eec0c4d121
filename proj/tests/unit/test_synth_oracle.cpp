#include <gtest/gtest.h>

#include <cmath>

#include "roomlayout/heatmap.hpp"
#include "roomlayout/layout.hpp"
#include "roomlayout/synth.hpp"

using namespace roomlayout;

TEST(SynthOracle, SameSeedSameScene) {
  EXPECT_EQ(sample_scene(12345), sample_scene(12345));
  EXPECT_FALSE(sample_scene(1) == sample_scene(2));
  EXPECT_NE(rng::derive_seed(7, 0), rng::derive_seed(7, 1));
  EXPECT_NE(rng::derive_seed(7, 0), rng::derive_seed(8, 0));
}

TEST(SynthOracle, FrontoparallelIsFullBox) {
  const auto gt = scene_to_groundtruth(sample_scene(3, SceneRanges::frontoparallel()));
  EXPECT_EQ(gt.room_type.id, 0);
  EXPECT_EQ(gt.group, Group::A);
  ASSERT_EQ(gt.keypoints.points.size(), 8u);
  // symmetric view: center-wall corners mirror around the image center
  const auto* k1 = gt.keypoints.find(1);
  const auto* k4 = gt.keypoints.find(4);
  EXPECT_NEAR(k1->x + k4->x, 320.0, 1e-9);
  EXPECT_NEAR(k1->y + k4->y, 320.0, 1e-9);
  // camera 2.1 widths from the wall at f = 320: wall spans 320 / 2.1 pixels
  EXPECT_NEAR(k4->x - k1->x, 320.0 / 2.1, 1e-9);
}

TEST(SynthOracle, EveryTypeReachableWithMatchingIds) {
  for (int t = 0; t < kRoomTypeCount; ++t) {
    for (int i = 0; i < 4; ++i) {
      SceneRanges r;
      r.room_type = RoomType{t};
      const auto s = sample_scene(rng::derive_seed(500 + t, i), r);
      EXPECT_EQ(s.room_type.id, t);
      const auto gt = scene_to_groundtruth(s);
      EXPECT_EQ(gt.room_type.id, t);
      EXPECT_EQ(gt.group, group_of_type(RoomType{t}));
      EXPECT_EQ(gt.floor_present, type_has_floor(RoomType{t}));
      EXPECT_EQ(gt.ceiling_present, type_has_ceiling(RoomType{t}));
      std::vector<int> ids;
      for (const auto& p : gt.keypoints.points) {
        ids.push_back(p.id);
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, 320.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LE(p.y, 320.0);
      }
      EXPECT_EQ(ids, keypoint_ids_of_type(RoomType{t}));

      const auto h = gt.mask.histogram();
      EXPECT_EQ(h[0], 0u) << "void pixel in type " << t;
      EXPECT_EQ(h[label_code(SemanticLabel::Floor)] > 0, gt.floor_present);
      EXPECT_EQ(h[label_code(SemanticLabel::Ceiling)] > 0, gt.ceiling_present);
      for (std::size_t l = 1; l < kLabelCount; ++l)
        if (h[l] > 0) {
          EXPECT_GE(static_cast<double>(h[l]), 0.03 * gt.mask.pixel_count());
        }
    }
  }
}

TEST(SynthOracle, GroupFollowsVisibleWalls) {
  SceneRanges r;
  r.room_type = RoomType{3};
  const auto gt = scene_to_groundtruth(sample_scene(44, r));
  EXPECT_EQ(gt.group, Group::B);
  EXPECT_EQ(gt.topology.walls.size(), 2u);
  const auto h = gt.mask.histogram();
  EXPECT_GT(h[label_code(SemanticLabel::LeftWall)], 0u);
  EXPECT_GT(h[label_code(SemanticLabel::CenterWall)], 0u);
  EXPECT_EQ(h[label_code(SemanticLabel::RightWall)], 0u);
}

TEST(SynthOracle, RasterizedLayoutAgreesWithRayCast) {
  for (int i = 0; i < 33; ++i) {
    SceneRanges r;
    r.room_type = RoomType{i % kRoomTypeCount};
    const auto gt = scene_to_groundtruth(sample_scene(rng::derive_seed(900, i), r));
    const SegMask m =
        rasterize(build_layout(gt.group, gt.keypoints, gt.floor_present, gt.ceiling_present, gt.mask.size()));
    std::size_t agree = 0;
    for (std::size_t p = 0; p < m.pixel_count(); ++p) agree += m.codes()[p] == gt.mask.codes()[p];
    EXPECT_GE(static_cast<double>(agree) / m.pixel_count(), 0.995) << "scene " << i;
  }
}

TEST(SynthOracle, DepthIsPositiveCameraZ) {
  // group A, so mask labels name the physical faces
  SceneRanges r;
  r.room_type = RoomType{0};
  const auto gt = scene_to_groundtruth(sample_scene(8, r));
  const PinholeCamera cam = gt.scene.camera();
  for (int y = 0; y < 320; y += 37)
    for (int x = 0; x < 320; x += 41) {
      const double z = gt.depth.at(x, y);
      ASSERT_GT(z, 0.0);
      // back-projected point lands on its face plane
      const Vec3 p = cam.center() + z * cam.ray_direction(x + 0.5, y + 0.5);
      const auto plane = region_plane(gt.mask.at(x, y), gt.scene.r);
      ASSERT_TRUE(plane.has_value());
      EXPECT_NEAR(plane->first.dot(p), plane->second, 1e-9);
    }
}

TEST(SynthOracle, ZeroNoiseReproducesGroundTruth) {
  for (int t = 0; t < kRoomTypeCount; ++t) {
    SceneRanges r;
    r.room_type = RoomType{t};
    const auto gt = scene_to_groundtruth(sample_scene(rng::derive_seed(71, t), r));
    const auto inputs = perturb(gt, {});
    const auto& own = inputs[static_cast<std::size_t>(gt.group)];
    EXPECT_EQ(own.segmentation, gt.mask);
    const auto decoded = rescale_keypoints(decode(own.heatmaps), gt.mask.size());
    ASSERT_EQ(decoded.points.size(), gt.keypoints.points.size());
    for (std::size_t i = 0; i < decoded.points.size(); ++i) {
      const auto& a = decoded.points[i];
      const auto& b = gt.keypoints.points[i];
      EXPECT_EQ(a.id, b.id);
      // heatmap cells are 4 image pixels; border points are pulled inward
      // by the truncated centroid
      EXPECT_LT(std::hypot(a.x - b.x, a.y - b.y), 8.0) << "type " << t << " id " << a.id;
    }
    for (Group g : kAllGroups) {
      const auto& in = inputs[static_cast<std::size_t>(g)];
      EXPECT_EQ(in.group, g);
      EXPECT_EQ(in.segmentation.size(), gt.mask.size());
      EXPECT_EQ(static_cast<int>(in.heatmaps.channels.size()), group_info(g).prototype_keypoint_count);
    }
  }
}

TEST(SynthOracle, LabelFlipRate) {
  const auto gt = scene_to_groundtruth(sample_scene(5));
  SegMask m = gt.mask;
  std::mt19937_64 gen(99);
  const std::size_t flipped = flip_labels(m, 0.1, gen);
  std::size_t differ = 0;
  for (std::size_t p = 0; p < m.pixel_count(); ++p) differ += m.codes()[p] != gt.mask.codes()[p];
  EXPECT_EQ(flipped, differ);
  EXPECT_NEAR(static_cast<double>(flipped) / m.pixel_count(), 0.1, 0.01);
  // flips never introduce a label that was absent
  const auto before = gt.mask.histogram(), after = m.histogram();
  for (std::size_t l = 0; l < kLabelCount; ++l)
    if (before[l] == 0) {
      EXPECT_EQ(after[l], 0u);
    }
  EXPECT_THROW(flip_labels(m, 1.5, gen), ValidationError);
}

TEST(SynthOracle, PerturbIsDeterministic) {
  const auto gt = scene_to_groundtruth(sample_scene(6));
  NoiseConfig n;
  n.keypoint_sigma = 1.0;
  n.label_flip = 0.1;
  n.boundary_radius = 2;
  n.seed = 1234;
  const auto a = perturb(gt, n), b = perturb(gt, n);
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(a[g].segmentation, b[g].segmentation);
    EXPECT_EQ(a[g].heatmaps.channels, b[g].heatmaps.channels);
  }
  n.seed = 1235;
  EXPECT_FALSE(perturb(gt, n)[0].segmentation == a[0].segmentation);
  n.label_flip = -0.1;
  EXPECT_THROW(perturb(gt, n), ValidationError);
}

TEST(SynthOracle, ImpossibleRangesRejected) {
  SceneRanges r;
  r.r = {2.0, 1.0};
  EXPECT_THROW(sample_scene(1, r), ValidationError);
  SceneRanges tiny = SceneRanges::frontoparallel();
  tiny.room_type = RoomType{7};  // the frontal view always shows floor and ceiling
  tiny.max_attempts = 5;
  EXPECT_THROW(sample_scene(1, tiny), ComputationError);
}
