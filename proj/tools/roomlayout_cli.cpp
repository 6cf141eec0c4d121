// roomlayout: command-line front end for the layout hypothesis engine.
//
// Exit codes: 0 success, 1 validation error (bad input or arguments),
// 2 computation failure.

#include <CLI11.hpp>

#include <algorithm>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "roomlayout/roomlayout.hpp"

namespace fs = std::filesystem;
using namespace roomlayout;
using io::Json;

namespace {

struct Globals {
  double lambda = kDefaultLambda;
  double iou_threshold = kDefaultIouThreshold;
  double presence_tau = kDefaultPresenceTau;
  double sigma = kDefaultSigma;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  HypothesisConfig hypothesis_config() const {
    HypothesisConfig c;
    c.lambda = lambda;
    c.iou_threshold = iou_threshold;
    c.presence_tau = presence_tau;
    return c;
  }
};

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

GroupBWallMapping parse_mapping(const std::string& s) {
  if (s == "left-center") return GroupBWallMapping::LeftCenter;
  if (s == "center-right") return GroupBWallMapping::CenterRight;
  throw ValidationError("unknown group B wall mapping '" + s + "'");
}

void run_select(const Globals& g, const fs::path& bundle_dir, const fs::path& out, const std::string& mapping,
                double min_conf) {
  const auto bundle = io::load_prediction_bundle(bundle_dir);
  HypothesisConfig cfg = g.hypothesis_config();
  cfg.b_mapping = parse_mapping(mapping);
  cfg.min_confidence = min_conf;
  const auto result = select(bundle.inputs, bundle.image, cfg);
  const auto path = io::save_selection(out, result, bundle.image_id);
  std::cout << bundle.image_id << ": group " << group_tag(result.chosen) << ", room type "
            << result.layout.room_type()->id << " -> " << path.string() << "\n";
}

void run_rasterize(const fs::path& layout_path, const fs::path& out, int width, int height,
                   const std::string& mapping) {
  const auto rec = io::load_layout_record(layout_path);
  const Layout l = rec.layout(parse_mapping(mapping));
  const ImageSize size = (width > 0 && height > 0) ? ImageSize{width, height} : rec.image;
  io::save_mask(out, rasterize(l, size));
}

void run_score(const Globals& g, const fs::path& layout_mask, const fs::path& seg_mask) {
  const auto s = score(io::load_mask(layout_mask), io::load_mask(seg_mask), g.lambda, g.iou_threshold);
  print_json(io::score_to_json(s));
}

void run_eval(const Globals& g, const fs::path& gt_dir, const fs::path& pred_dir, bool tolerant,
              const fs::path& out) {
  if (!fs::is_directory(gt_dir)) throw ValidationError("ground truth directory " + gt_dir.string() + " not found");
  std::vector<fs::path> records;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.path().extension() == ".json") records.push_back(e.path());
  std::sort(records.begin(), records.end());
  std::vector<EvalPair> pairs;
  std::vector<ImageMetrics> unreadable;
  for (const auto& p : records) {
    const auto gt = io::load_groundtruth(p);
    const fs::path pred_path = pred_dir / (gt.image_id + ".json");
    try {
      const auto pred = io::load_groundtruth(pred_path);
      pairs.push_back({gt.image_id, gt.image, {pred.mask, pred.keypoints}, {gt.mask, gt.keypoints}});
    } catch (const ValidationError& e) {
      unreadable.push_back({gt.image_id, false, 0.0, 0.0, e.what()});
    }
  }
  if (pairs.empty()) throw ValidationError("no evaluable prediction found");
  MetricsReport report = dataset_eval(pairs, {tolerant, g.jobs});
  for (auto& u : unreadable) {
    report.images.push_back(u);
    ++report.skipped;
  }
  const Json j = io::metrics_to_json(report);
  if (!out.empty()) io::write_json(out, j);
  std::cout << "PE " << report.pixel_error_pct << "%  KPE " << report.keypoint_error_pct << "%  over "
            << report.image_count << " images (" << report.skipped << " skipped)\n";
}

void run_encode(const Globals& g, const fs::path& layout_path, const fs::path& out, int res_w, int res_h) {
  const auto rec = io::load_layout_record(layout_path);
  io::save_heatmaps(out, encode(rec.keypoints, {res_w, res_h}, g.sigma));
}

void run_decode(const fs::path& dir, int width, int height, double min_conf, const fs::path& out) {
  const Heatmap h = io::load_heatmaps(dir);
  KeypointSet k = decode(h, min_conf);
  if (width > 0 && height > 0) k = rescale_keypoints(k, {width, height});
  Json j;
  j["group"] = std::string(1, group_tag(k.group));
  j["width"] = k.frame.width;
  j["height"] = k.frame.height;
  Json arr = Json::array();
  for (const auto& p : k.points) arr.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}, {"confidence", p.confidence}});
  j["keypoints"] = arr;
  if (out.empty()) print_json(j);
  else io::write_json(out, j);
}

void run_depth(const fs::path& layout_path, const fs::path& prefix) {
  const auto rec = io::load_layout_record(layout_path);
  if (rec.room_type.id != 0) throw ValidationError("depth estimation needs a room type 0 layout");
  const CameraFit fit = fit_camera_and_box(rec.keypoints, rec.image);
  const DepthMap d = render_depth(fit, rec.layout(), rec.image);
  io::save_depth_raster(prefix.string() + ".depth", d);
  io::save_depth_png(prefix.string() + ".png", d);
  Json j;
  j["r"] = fit.r;
  j["f"] = fit.f;
  j["rotation"] = {fit.rotation.x(), fit.rotation.y(), fit.rotation.z()};
  j["translation"] = {fit.translation.x(), fit.translation.y(), fit.translation.z()};
  j["rms_residual"] = fit.rms_residual;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["degenerate"] = fit.degenerate;
  j["depth_min"] = d.min;
  j["depth_max"] = d.max;
  j["filled_from_neighbor"] = d.filled_from_neighbor;
  io::write_json(prefix.string() + "_fit.json", j);
  std::cout << "r " << fit.r << "  f " << fit.f << "  rms " << fit.rms_residual << " px"
            << (fit.converged ? "" : "  (not converged)") << "\n";
}

struct SynthArgs {
  fs::path out;
  int count = 10;
  int type = -1;
  int width = 320;
  int height = 320;
  double flip = 0.0;
  double jitter = 0.0;
  int radius = 0;
};

void synth_one(const Globals& g, const SynthArgs& a, int i) {
  SceneRanges ranges;
  ranges.image = {a.width, a.height};
  ranges.room_type = RoomType{a.type >= 0 ? a.type : i % kRoomTypeCount};
  const auto scene = sample_scene(rng::derive_seed(g.seed, static_cast<std::uint64_t>(i)), ranges);
  const auto gt = scene_to_groundtruth(scene);
  char id[32];
  std::snprintf(id, sizeof id, "synth_%05d", i);

  io::GroundTruthRecord rec;
  rec.image_id = id;
  rec.image = gt.mask.size();
  rec.room_type = gt.room_type;
  rec.keypoints = gt.keypoints;
  rec.mask_path = std::string(id) + "_mask.png";
  rec.mask = gt.mask;
  io::save_groundtruth(a.out / "gt" / (std::string(id) + ".json"), rec);

  NoiseConfig noise;
  noise.label_flip = a.flip;
  noise.keypoint_sigma = a.jitter;
  noise.boundary_radius = a.radius;
  noise.seed = rng::derive_seed(g.seed ^ 0x6e6f697365ULL, static_cast<std::uint64_t>(i));
  PerturbOptions opt;
  opt.sigma = g.sigma;
  io::PredictionBundle bundle{id, gt.mask.size(), perturb(gt, noise, opt)};
  io::save_prediction_bundle(a.out / "pred" / id, bundle);
}

void run_synth(const Globals& g, const SynthArgs& a) {
  if (a.count <= 0) throw ValidationError("--count must be positive");
  if (a.type >= kRoomTypeCount) throw ValidationError("--type must lie in 0..10");
  const unsigned jobs = std::max(1u, std::min<unsigned>(g.jobs, static_cast<unsigned>(a.count)));
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (int i = static_cast<int>(w); i < a.count; i += static_cast<int>(jobs)) synth_one(g, a, i);
    }));
  for (auto& f : workers) f.get();
  std::cout << "wrote " << a.count << " scenes to " << a.out.string() << "\n";
}

void run_overlay(const fs::path& image, const fs::path& layout_path, const fs::path& out) {
  const auto rec = io::load_layout_record(layout_path);
  io::RawImage rgb = io::to_rgb8(io::read_png(image));
  io::draw_layout(rgb, rec.layout());
  io::write_png(out, rgb);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Room layout hypothesis selection, evaluation, depth and synthetic data"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--lambda", g.lambda, "weight of the mean IoU term")->capture_default_str();
  app.add_option("--iou-threshold", g.iou_threshold, "IoU above which a region matches")->capture_default_str();
  app.add_option("--presence-tau", g.presence_tau, "floor/ceiling presence fraction")->capture_default_str();
  app.add_option("--sigma", g.sigma, "heatmap Gaussian sigma (heatmap pixels)")->capture_default_str();
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.set_config("--config", "", "key=value configuration file");

  std::string mapping = "left-center";
  double min_conf = kDefaultMinConfidence;

  auto* sel = app.add_subcommand("select", "pick the best hypothesis of a prediction bundle");
  fs::path bundle_dir, sel_out = ".";
  sel->add_option("bundle", bundle_dir, "prediction bundle directory")->required();
  sel->add_option("-o,--out", sel_out, "output directory")->capture_default_str();
  sel->add_option("--b-mapping", mapping, "group B wall labels: left-center or center-right")->capture_default_str();
  sel->add_option("--min-confidence", min_conf, "heatmap peak threshold")->capture_default_str();

  auto* ras = app.add_subcommand("rasterize", "render a layout record to a label mask");
  fs::path ras_layout, ras_out;
  int ras_w = 0, ras_h = 0;
  ras->add_option("layout", ras_layout, "layout record JSON")->required();
  ras->add_option("-o,--out", ras_out, "mask PNG")->required();
  ras->add_option("--width", ras_w, "output width (default: record width)");
  ras->add_option("--height", ras_h, "output height (default: record height)");
  ras->add_option("--b-mapping", mapping, "group B wall labels")->capture_default_str();

  auto* sco = app.add_subcommand("score", "score a layout mask against a segmentation mask");
  fs::path sco_layout, sco_seg;
  sco->add_option("layout_mask", sco_layout, "rasterized layout PNG")->required();
  sco->add_option("segmentation", sco_seg, "segmentation PNG")->required();

  auto* ev = app.add_subcommand("eval", "pixel and keypoint error of predictions against ground truth");
  fs::path ev_gt, ev_pred, ev_out;
  bool tolerant = false;
  ev->add_option("--gt", ev_gt, "directory of ground truth records")->required();
  ev->add_option("--pred", ev_pred, "directory of predicted records (<image_id>.json)")->required();
  ev->add_option("-o,--out", ev_out, "metrics report JSON");
  ev->add_flag("--wall-permutation", tolerant, "minimize pixel error over wall relabelings");

  auto* enc = app.add_subcommand("encode-heatmaps", "render a layout record's keypoints as heatmaps");
  fs::path enc_layout, enc_out;
  int res_w = kDefaultHeatmapSize.width, res_h = kDefaultHeatmapSize.height;
  enc->add_option("layout", enc_layout, "layout record JSON")->required();
  enc->add_option("-o,--out", enc_out, "heatmap directory")->required();
  enc->add_option("--res-width", res_w, "heatmap width")->capture_default_str();
  enc->add_option("--res-height", res_h, "heatmap height")->capture_default_str();

  auto* dec = app.add_subcommand("decode-heatmaps", "extract keypoints from a heatmap directory");
  fs::path dec_dir, dec_out;
  int dec_w = 0, dec_h = 0;
  dec->add_option("heatmaps", dec_dir, "heatmap directory")->required();
  dec->add_option("--width", dec_w, "rescale to this image width");
  dec->add_option("--height", dec_h, "rescale to this image height");
  dec->add_option("--min-confidence", min_conf, "peak threshold")->capture_default_str();
  dec->add_option("-o,--out", dec_out, "output JSON (default: stdout)");

  auto* dep = app.add_subcommand("depth", "fit a box to a type 0 layout and render relative depth");
  fs::path dep_layout, dep_prefix;
  dep->add_option("layout", dep_layout, "layout record JSON (room type 0)")->required();
  dep->add_option("-o,--out", dep_prefix, "output prefix (.depth, .png, _fit.json)")->required();

  auto* syn = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  SynthArgs sa;
  syn->add_option("-o,--out", sa.out, "output directory")->required();
  syn->add_option("--count", sa.count, "number of scenes")->capture_default_str();
  syn->add_option("--type", sa.type, "room type (default: cycle through all 11)");
  syn->add_option("--width", sa.width, "image width")->capture_default_str();
  syn->add_option("--height", sa.height, "image height")->capture_default_str();
  syn->add_option("--label-flip", sa.flip, "segmentation label flip probability")->capture_default_str();
  syn->add_option("--jitter", sa.jitter, "keypoint jitter sigma in pixels")->capture_default_str();
  syn->add_option("--boundary-radius", sa.radius, "dilation radius of one random region")->capture_default_str();

  auto* ovl = app.add_subcommand("overlay", "draw layout edges onto an image");
  fs::path ovl_image, ovl_layout, ovl_out;
  ovl->add_option("image", ovl_image, "input PNG")->required();
  ovl->add_option("layout", ovl_layout, "layout record JSON")->required();
  ovl->add_option("-o,--out", ovl_out, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sel) run_select(g, bundle_dir, sel_out, mapping, min_conf);
    else if (*ras) run_rasterize(ras_layout, ras_out, ras_w, ras_h, mapping);
    else if (*sco) run_score(g, sco_layout, sco_seg);
    else if (*ev) run_eval(g, ev_gt, ev_pred, tolerant, ev_out);
    else if (*enc) run_encode(g, enc_layout, enc_out, res_w, res_h);
    else if (*dec) run_decode(dec_dir, dec_w, dec_h, min_conf, dec_out);
    else if (*dep) run_depth(dep_layout, dep_prefix);
    else if (*syn) run_synth(g, sa);
    else if (*ovl) run_overlay(ovl_image, ovl_layout, ovl_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
