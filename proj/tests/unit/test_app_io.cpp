#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "roomlayout/io.hpp"
#include "roomlayout/synth.hpp"

using namespace roomlayout;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("roomlayout_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

io::GroundTruthRecord sample_record() {
  SceneRanges r;
  r.room_type = RoomType{4};
  const auto gt = scene_to_groundtruth(sample_scene(21, r));
  io::GroundTruthRecord rec;
  rec.image_id = "img_0";
  rec.image = gt.mask.size();
  rec.room_type = gt.room_type;
  rec.keypoints = gt.keypoints;
  rec.mask_path = "img_0_mask.png";
  rec.mask = gt.mask;
  return rec;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ROOMLAYOUT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(AppIo, RecordRoundTrip) {
  TempDir dir;
  const auto rec = sample_record();
  io::save_groundtruth(dir.path() / "img_0.json", rec);
  const auto back = io::load_groundtruth(dir.path() / "img_0.json");
  EXPECT_EQ(back.image_id, rec.image_id);
  EXPECT_EQ(back.image, rec.image);
  EXPECT_EQ(back.room_type, rec.room_type);
  EXPECT_EQ(back.mask, rec.mask);
  ASSERT_EQ(back.keypoints.points.size(), rec.keypoints.points.size());
  for (std::size_t i = 0; i < back.keypoints.points.size(); ++i) {
    EXPECT_EQ(back.keypoints.points[i].id, rec.keypoints.points[i].id);
    EXPECT_DOUBLE_EQ(back.keypoints.points[i].x, rec.keypoints.points[i].x);
    EXPECT_DOUBLE_EQ(back.keypoints.points[i].y, rec.keypoints.points[i].y);
  }
}

TEST(AppIo, IllegalKeypointIdIsNamed) {
  TempDir dir;
  const auto rec = sample_record();
  io::save_groundtruth(dir.path() / "img_0.json", rec);
  auto j = io::read_json(dir.path() / "img_0.json");
  j["keypoints"][0]["id"] = 7;  // type 4 has ids 1-4
  io::write_json(dir.path() / "bad.json", j);
  try {
    io::load_groundtruth(dir.path() / "bad.json");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("keypoint id 7 is not valid for room type 4"), std::string::npos) << e.what();
  }
  j = io::read_json(dir.path() / "img_0.json");
  j.erase("room_type");
  io::write_json(dir.path() / "missing.json", j);
  try {
    io::load_groundtruth(dir.path() / "missing.json");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field 'room_type'"), std::string::npos) << e.what();
  }
}

TEST(AppIo, TruncatedPngIsValidationError) {
  TempDir dir;
  SegMask m(16, 16, SemanticLabel::Floor);
  io::save_mask(dir.path() / "m.png", m);
  const std::string bytes = slurp(dir.path() / "m.png");
  spit(dir.path() / "cut.png", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(io::load_mask(dir.path() / "cut.png"), ValidationError);
  spit(dir.path() / "junk.png", "not a png at all");
  EXPECT_THROW(io::load_mask(dir.path() / "junk.png"), ValidationError);
  EXPECT_THROW(io::load_mask(dir.path() / "absent.png"), ValidationError);

  io::RawImage bad{4, 4, 1, 8, std::vector<std::uint16_t>(16, 9)};
  io::write_png(dir.path() / "code9.png", bad);
  EXPECT_THROW(io::load_mask(dir.path() / "code9.png"), ValidationError);
}

TEST(AppIo, BundleRoundTripIsLosslessAfterQuantize) {
  TempDir dir;
  const auto gt = scene_to_groundtruth(sample_scene(22));
  NoiseConfig n;
  n.label_flip = 0.05;
  n.seed = 3;
  io::PredictionBundle b{"scene", gt.mask.size(), perturb(gt, n)};
  io::save_prediction_bundle(dir.path() / "bundle", b);
  const auto back = io::load_prediction_bundle(dir.path() / "bundle");
  EXPECT_EQ(back.image_id, "scene");
  EXPECT_EQ(back.image, b.image);
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(back.inputs[g].group, b.inputs[g].group);
    EXPECT_EQ(back.inputs[g].segmentation, b.inputs[g].segmentation);
    EXPECT_EQ(back.inputs[g].heatmaps, io::quantize(b.inputs[g].heatmaps));
  }
  // selection on the reloaded bundle matches selection on quantized inputs
  auto q = b.inputs;
  for (auto& in : q) in.heatmaps = io::quantize(in.heatmaps);
  const auto s0 = select(q, b.image);
  const auto s1 = select(back.inputs, back.image);
  EXPECT_EQ(s0.chosen, s1.chosen);
  EXPECT_EQ(s0.layout.keypoints, s1.layout.keypoints);
}

TEST(AppIo, MissingHypothesisDirectory) {
  TempDir dir;
  const auto gt = scene_to_groundtruth(sample_scene(23));
  io::save_prediction_bundle(dir.path() / "b", {"x", gt.mask.size(), perturb(gt, {})});
  fs::remove_all(dir.path() / "b" / "C");
  try {
    io::load_prediction_bundle(dir.path() / "b");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "hypothesis C absent");
  }
}

TEST(AppIo, HeatmapChannelCountMismatch) {
  TempDir dir;
  KeypointSet k;
  k.group = Group::B;
  k.frame = {80, 80};
  io::save_heatmaps(dir.path() / "h", encode(k, {80, 80}));
  auto meta = io::read_json(dir.path() / "h" / "meta.json");
  meta["channels"] = 4;
  io::write_json(dir.path() / "h" / "meta.json", meta);
  try {
    io::load_heatmaps(dir.path() / "h");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("heatmap channel count 4 does not match group B prototype (6)"),
              std::string::npos)
        << e.what();
  }
}

TEST(AppIo, SelectionReportRoundTrip) {
  TempDir dir;
  SceneRanges r;
  r.room_type = RoomType{1};
  const auto gt = scene_to_groundtruth(sample_scene(24, r));
  const auto res = select(perturb(gt, {}), gt.mask.size());
  const fs::path path = io::save_selection(dir.path(), res, "s1");
  EXPECT_TRUE(fs::exists(dir.path() / "s1_layout.png"));
  const auto rep = io::load_selection(path);
  EXPECT_EQ(rep, io::make_report(res, "s1"));
  EXPECT_EQ(rep.room_type.id, 1);

  const auto j = io::read_json(path);
  const auto& a = j["hypotheses"][0]["score"];
  EXPECT_TRUE(a.contains("matching_regions"));
  EXPECT_TRUE(a.contains("mean_iou"));
  EXPECT_DOUBLE_EQ(a["total"].get<double>(),
                   a["matching_regions"].get<int>() + a["lambda"].get<double>() * a["mean_iou"].get<double>());
  // the report doubles as a prediction record
  const auto lr = io::load_layout_record(path);
  EXPECT_EQ(lr.room_type.id, 1);
  EXPECT_EQ(io::load_mask(dir.path() / "s1_layout.png"), rasterize(res.layout, res.image));
}

TEST(AppIo, WritesAreByteDeterministic) {
  TempDir dir;
  const auto gt = scene_to_groundtruth(sample_scene(25));
  const auto inputs = perturb(gt, {});
  io::save_prediction_bundle(dir.path() / "a", {"x", gt.mask.size(), inputs});
  io::save_prediction_bundle(dir.path() / "b", {"x", gt.mask.size(), inputs});
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path() / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir.path() / "b" / rel)) << rel;
  }
}

TEST(AppIo, DepthRasterRoundTrip) {
  TempDir dir;
  DepthMap d;
  d.width = 3;
  d.height = 2;
  d.depth = {1.0, 1.5, 2.25, 3.0, 0.125, 8.0};
  io::save_depth_raster(dir.path() / "d.depth", d);
  EXPECT_EQ(fs::file_size(dir.path() / "d.depth"), 16u + 4u * 6u);
  const auto back = io::load_depth_raster(dir.path() / "d.depth");
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.depth, d.depth);
  EXPECT_DOUBLE_EQ(back.min, 0.125);
  EXPECT_DOUBLE_EQ(back.max, 8.0);
  spit(dir.path() / "short.depth", slurp(dir.path() / "d.depth").substr(0, 20));
  EXPECT_THROW(io::load_depth_raster(dir.path() / "short.depth"), ValidationError);
}

TEST(AppIo, CliExitCodes) {
  TempDir dir;
  const std::string d = dir.path().string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);                             // no subcommand
  EXPECT_EQ(run_cli("select --lambda abc " + d), 1);     // bad number
  EXPECT_EQ(run_cli("select " + d + "/nowhere"), 1);     // missing bundle
  EXPECT_EQ(run_cli("synth -o " + d + "/syn --count 2 --seed 4"), 0);
  EXPECT_EQ(run_cli("select " + d + "/syn/pred/synth_00000 -o " + d + "/sel"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "sel" / "synth_00000.json"));
  EXPECT_EQ(run_cli("eval --gt " + d + "/syn/gt --pred " + d + "/sel -o " + d + "/m.json"), 0);

  // all-zero heatmaps in every group: nothing can be decoded
  const auto gt = scene_to_groundtruth(sample_scene(26));
  auto inputs = perturb(gt, {});
  for (auto& in : inputs)
    for (auto& c : in.heatmaps.channels) std::fill(c.begin(), c.end(), 0.0f);
  io::save_prediction_bundle(dir.path() / "empty", {"e", gt.mask.size(), inputs});
  EXPECT_EQ(run_cli("select " + d + "/empty -o " + d + "/sel2"), 2);
}
