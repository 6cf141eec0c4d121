#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "roomlayout/metrics.hpp"

using namespace roomlayout;

namespace {

KeypointSet set_of(Group g, ImageSize frame, std::vector<Keypoint> pts) {
  KeypointSet k;
  k.group = g;
  k.frame = frame;
  k.points = std::move(pts);
  return k;
}

double brute_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size(), cols = cost[0].size();
  std::vector<std::size_t> idx(std::max(rows, cols));
  std::iota(idx.begin(), idx.end(), 0);
  double best = 1e300;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      if (idx[i] < cols) c += cost[i][idx[i]];
    // every row must be assigned when rows <= cols (and every column otherwise)
    std::size_t used = 0;
    for (std::size_t i = 0; i < rows; ++i) used += idx[i] < cols;
    if (used == std::min(rows, cols)) best = std::min(best, c);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace

TEST(Metrics, AssignmentMatchesPermutationSearch) {
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + trial % 6, cols = 1 + (trial / 6) % 6;
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    for (auto& r : cost)
      for (auto& c : r) c = u(g);
    const auto a = min_cost_assignment(cost);
    EXPECT_NEAR(a.cost, brute_assignment(cost), 1e-12) << rows << "x" << cols;
    std::vector<int> seen;
    for (int c : a.row_to_col)
      if (c >= 0) seen.push_back(c);
    EXPECT_EQ(seen.size(), std::min(rows, cols));
    std::sort(seen.begin(), seen.end());
    EXPECT_TRUE(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
}

TEST(Metrics, PixelErrorIdenticalIsZero) {
  SegMask m(6, 6, SemanticLabel::Floor);
  m.set(2, 2, SemanticLabel::LeftWall);
  EXPECT_DOUBLE_EQ(pixel_error(m, m), 0.0);
}

TEST(Metrics, PixelErrorFourOfSixteen) {
  SegMask gt(4, 4, SemanticLabel::CenterWall);
  SegMask pred = gt;
  for (int i = 0; i < 4; ++i) pred.set(i, i, SemanticLabel::Floor);
  EXPECT_DOUBLE_EQ(pixel_error(pred, gt), 25.0);
}

TEST(Metrics, PixelErrorMatchesCountingOracle) {
  std::mt19937_64 g(8);
  std::uniform_int_distribution<int> d(0, 5);
  for (int t = 0; t < 100; ++t) {
    SegMask a(7, 5), b(7, 5);
    for (auto& c : a.codes()) c = static_cast<std::uint8_t>(d(g));
    for (auto& c : b.codes()) c = static_cast<std::uint8_t>(d(g));
    b.codes()[0] = 1;  // at least one labelled ground-truth pixel
    int valid = 0, wrong = 0;
    for (std::size_t i = 0; i < a.codes().size(); ++i) {
      if (b.codes()[i] == 0) continue;
      ++valid;
      wrong += a.codes()[i] != b.codes()[i];
    }
    EXPECT_NEAR(pixel_error(a, b), 100.0 * wrong / valid, 1e-12);
  }
}

TEST(Metrics, PixelErrorWallPermutation) {
  SegMask gt(4, 1), pred(4, 1);
  gt.codes() = {3, 4, 5, 1};
  pred.codes() = {4, 5, 3, 1};
  EXPECT_DOUBLE_EQ(pixel_error(pred, gt), 75.0);
  EXPECT_DOUBLE_EQ(pixel_error(pred, gt, true), 0.0);
  EXPECT_THROW(pixel_error(pred, SegMask(3, 1)), ValidationError);
  EXPECT_THROW(pixel_error(pred, SegMask(4, 1)), ValidationError);  // all void
}

TEST(Metrics, KeypointErrorExamples) {
  const ImageSize img{300, 400};
  const auto gt = set_of(Group::C, img, {{1, 100, 100}});
  EXPECT_DOUBLE_EQ(keypoint_error(gt, gt, img), 0.0);
  const auto off = set_of(Group::C, img, {{1, 130, 140}});
  EXPECT_DOUBLE_EQ(keypoint_error(off, gt, img), 10.0);

  const auto four = set_of(Group::A, img, {{1, 10, 10}, {2, 20, 20}, {3, 30, 30}, {4, 40, 40}});
  const auto three = set_of(Group::A, img, {{1, 10, 10}, {2, 20, 20}, {3, 30, 30}});
  EXPECT_DOUBLE_EQ(keypoint_error(three, four, img), 25.0);
}

TEST(Metrics, KeypointErrorAcrossGroupsUsesMatching) {
  const ImageSize img{300, 400};
  const auto gt = set_of(Group::B, img, {{1, 10, 10}, {2, 200, 300}});
  // same positions, different ids and order
  const auto pred = set_of(Group::C, img, {{3, 200, 300}, {4, 10, 10}});
  EXPECT_DOUBLE_EQ(keypoint_error(pred, gt, img), 0.0);
  // far-away point costs at most 1
  const auto far = set_of(Group::C, img, {{1, 0, 0}});
  const auto other = set_of(Group::B, img, {{1, 300, 400}});
  EXPECT_DOUBLE_EQ(keypoint_error(far, other, img), 100.0);
}

TEST(Metrics, KeypointErrorRescalesFrames) {
  const auto gt = set_of(Group::C, {320, 320}, {{1, 160, 160}});
  const auto pred = set_of(Group::C, {80, 80}, {{1, 40, 40}});
  EXPECT_NEAR(keypoint_error(pred, gt, {320, 320}), 0.0, 1e-12);
}

TEST(Metrics, DatasetMeansAreArithmetic) {
  SegMask gt(10, 1, SemanticLabel::Floor);
  SegMask p1 = gt, p2 = gt;
  p1.codes()[0] = 2;
  p2.codes()[0] = 2;
  p2.codes()[1] = 2;
  const auto k = set_of(Group::C, {10, 1}, {{1, 1, 0}});
  std::vector<EvalPair> pairs = {{"a", {10, 1}, {p1, k}, {gt, k}}, {"b", {10, 1}, {p2, k}, {gt, k}}};
  const auto r = dataset_eval(pairs);
  EXPECT_DOUBLE_EQ(r.images[0].pixel_error_pct, 10.0);
  EXPECT_DOUBLE_EQ(r.images[1].pixel_error_pct, 20.0);
  EXPECT_DOUBLE_EQ(r.pixel_error_pct, 15.0);
  EXPECT_EQ(r.image_count, 2u);

  std::vector<EvalPair> one = {{"p", {10, 1}, {gt, k}, {gt, k}}};
  const auto perfect = dataset_eval(one);
  EXPECT_DOUBLE_EQ(perfect.pixel_error_pct, 0.0);
  EXPECT_DOUBLE_EQ(perfect.keypoint_error_pct, 0.0);
}

TEST(Metrics, DatasetInjectedErrorsAndJobs) {
  // 100 images; image i has i mislabelled pixels out of 200 and a keypoint
  // offset of (3i, 4i) on a 120x160 frame (diagonal 200).
  std::vector<EvalPair> pairs;
  double pe = 0.0, kpe = 0.0;
  for (int i = 0; i < 100; ++i) {
    SegMask gt(10, 20, SemanticLabel::CenterWall), pred = gt;
    for (int p = 0; p < i; ++p) pred.codes()[static_cast<std::size_t>(p)] = 1;
    const auto kg = set_of(Group::C, {120, 160}, {{1, 0, 0}});
    const auto kp = set_of(Group::C, {120, 160}, {{1, 0.3 * i, 0.4 * i}});
    pairs.push_back({"img" + std::to_string(i), {120, 160}, {pred, kp}, {gt, kg}});
    pe += 100.0 * i / 200.0;
    kpe += 100.0 * (0.5 * i) / 200.0;
  }
  const auto serial = dataset_eval(pairs, {false, 1});
  const auto parallel = dataset_eval(pairs, {false, 4});
  EXPECT_NEAR(serial.pixel_error_pct, pe / 100.0, 1e-12);
  EXPECT_NEAR(serial.keypoint_error_pct, kpe / 100.0, 1e-12);
  EXPECT_EQ(serial.pixel_error_pct, parallel.pixel_error_pct);
  EXPECT_EQ(serial.keypoint_error_pct, parallel.keypoint_error_pct);
}

TEST(Metrics, DatasetSkipsUnevaluableImages) {
  SegMask gt(4, 4, SemanticLabel::Floor);
  const auto k = set_of(Group::C, {4, 4}, {{1, 1, 1}});
  std::vector<EvalPair> pairs = {{"ok", {4, 4}, {gt, k}, {gt, k}}, {"bad", {4, 4}, {SegMask(3, 3), k}, {gt, k}}};
  const auto r = dataset_eval(pairs);
  EXPECT_EQ(r.image_count, 1u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_FALSE(r.images[1].ok);
  EXPECT_THROW(dataset_eval(std::vector<EvalPair>{}), ValidationError);
}
