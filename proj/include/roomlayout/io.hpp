#pragma once

// On-disk formats.
//
//   mask            8-bit grayscale PNG holding label codes 0..5
//   heatmap dir     kp_<id>.png (16-bit, round(conf * 65535)) per channel
//                   plus meta.json {group, sigma, width, height, channels}
//   record JSON     {image_id, width, height, room_type,
//                    keypoints: [{id, x, y, confidence?}],
//                    mask: <path relative to JSON>}
//   bundle dir      bundle.json {image_id, width, height} and A/, B/, C/
//                   each holding segmentation.png and heatmaps/
//   selection       <id>.json (record schema plus group, presence flags and
//                   per-hypothesis scores) and <id>_layout.png
//   depth raster    "RLDEPTH1", uint32 width, uint32 height, float32 data,
//                   all little-endian
//
// PNG writes use fixed settings and no timestamps, so identical inputs
// give identical bytes.

#include <png.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomlayout/core_model.hpp"
#include "roomlayout/depth_fit.hpp"
#include "roomlayout/error.hpp"
#include "roomlayout/heatmap.hpp"
#include "roomlayout/hypothesis.hpp"
#include "roomlayout/layout.hpp"
#include "roomlayout/metrics.hpp"
#include "roomlayout/types.hpp"

namespace roomlayout::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------- PNG

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

namespace detail {

inline std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

struct MemReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

struct PngError {
  char message[256];
};

inline void rl_png_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof err->message, "%s", msg);
  png_longjmp(png, 1);
}

inline void rl_png_warning(png_structp, png_const_charp) {}

inline void rl_png_read(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->size - r->pos < n) png_error(png, "unexpected end of file");
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

inline void rl_png_write(png_structp png, png_bytep data, png_size_t n) {
  auto* s = static_cast<std::string*>(png_get_io_ptr(png));
  s->append(reinterpret_cast<const char*>(data), n);
}

inline void rl_png_flush(png_structp) {}

// Decodes into a malloc'd buffer; only trivially destructible locals live
// across setjmp. Returns false with `err` set on failure.
inline bool decode_png(const unsigned char* data, std::size_t size, RawImage& out, PngError& err) {
  MemReader reader{data, size, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, rl_png_error, rl_png_warning);
  if (!png) {
    std::snprintf(err.message, sizeof err.message, "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  unsigned char* volatile pixels = nullptr;
  png_bytep* volatile rows = nullptr;
  if (!info || setjmp(png_jmpbuf(png))) {
    std::free(pixels);
    std::free(rows);
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (!info) std::snprintf(err.message, sizeof err.message, "out of memory");
    return false;
  }
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) png_error(png, "not a PNG file");
  png_set_read_fn(png, &reader, rl_png_read);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) png_error(png, "unsupported image size");
  pixels = static_cast<unsigned char*>(std::malloc(rowbytes * h));
  rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * h));
  if (!pixels || !rows) png_error(png, "out of memory");
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels + y * rowbytes;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = channels;
  out.bit_depth = depth;
  out.samples.resize(static_cast<std::size_t>(w) * h * static_cast<std::size_t>(channels));
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const std::size_t row = i / (static_cast<std::size_t>(w) * static_cast<std::size_t>(channels));
    const std::size_t col = i % (static_cast<std::size_t>(w) * static_cast<std::size_t>(channels));
    const unsigned char* p = pixels + row * rowbytes;
    out.samples[i] = depth == 16 ? static_cast<std::uint16_t>((p[2 * col] << 8) | p[2 * col + 1]) : p[col];
  }
  std::free(pixels);
  std::free(rows);
  return true;
}

inline bool encode_png(const RawImage& img, std::string& out, PngError& err) {
  const std::size_t rowbytes = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels) *
                               static_cast<std::size_t>(img.bit_depth / 8);
  std::vector<unsigned char> buf(rowbytes * static_cast<std::size_t>(img.height));
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (img.bit_depth == 16) {
      buf[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
      buf[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
    } else {
      buf[i] = static_cast<unsigned char>(img.samples[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = buf.data() + y * rowbytes;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, rl_png_error, rl_png_warning);
  if (!png) {
    std::snprintf(err.message, sizeof err.message, "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    if (!info) std::snprintf(err.message, sizeof err.message, "out of memory");
    return false;
  }
  png_set_write_fn(png, &out, rl_png_write, rl_png_flush);
  png_set_compression_level(png, 6);
  const int color = img.channels == 1   ? PNG_COLOR_TYPE_GRAY
                    : img.channels == 2 ? PNG_COLOR_TYPE_GRAY_ALPHA
                    : img.channels == 3 ? PNG_COLOR_TYPE_RGB
                                        : PNG_COLOR_TYPE_RGB_ALPHA;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), img.bit_depth,
               color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

inline RawImage read_png(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  RawImage img;
  detail::PngError err{};
  if (!detail::decode_png(bytes.data(), bytes.size(), img, err))
    throw ValidationError("cannot decode PNG " + path.string() + ": " + err.message);
  return img;
}

inline void write_png(const fs::path& path, const RawImage& img) {
  if (img.width <= 0 || img.height <= 0 || img.channels < 1 || img.channels > 4 ||
      (img.bit_depth != 8 && img.bit_depth != 16) ||
      img.samples.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw ValidationError("invalid image for PNG output");
  std::string bytes;
  detail::PngError err{};
  if (!detail::encode_png(img, bytes, err))
    throw ComputationError("cannot encode PNG " + path.string() + ": " + err.message);
  detail::write_file(path, bytes);
}

// ---------------------------------------------------------------- masks

inline void save_mask(const fs::path& path, const SegMask& m) {
  RawImage img{m.width(), m.height(), 1, 8, {}};
  img.samples.assign(m.codes().begin(), m.codes().end());
  write_png(path, img);
}

inline SegMask load_mask(const fs::path& path) {
  const RawImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 8)
    throw ValidationError("mask " + path.string() + " must be an 8-bit single-channel PNG");
  SegMask m(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (img.samples[i] >= kLabelCount)
      throw ValidationError("mask " + path.string() + " contains invalid label code " +
                            std::to_string(img.samples[i]));
    m.codes()[i] = static_cast<std::uint8_t>(img.samples[i]);
  }
  return m;
}

// ---------------------------------------------------------------- JSON helpers

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const Json& j) { detail::write_file(path, j.dump(2) + "\n"); }

namespace detail {

inline const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) throw ValidationError(where + ": missing field '" + name + "'");
  return j.at(name);
}

template <class T>
T get(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + ": field '" + name + "' has the wrong type");
  }
}

inline Json keypoints_to_json(const KeypointSet& k) {
  Json arr = Json::array();
  for (const auto& p : k.points) {
    Json e = {{"id", p.id}, {"x", p.x}, {"y", p.y}};
    if (p.confidence != 1.0) e["confidence"] = p.confidence;  // decoded peaks only
    arr.push_back(e);
  }
  return arr;
}

inline std::vector<Keypoint> keypoints_from_json(const Json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError(where + ": field 'keypoints' must be an array");
  std::vector<Keypoint> out;
  for (const auto& e : arr) {
    Keypoint k;
    k.id = get<int>(e, "id", where + " keypoint");
    k.x = get<double>(e, "x", where + " keypoint");
    k.y = get<double>(e, "y", where + " keypoint");
    if (e.contains("confidence")) k.confidence = get<double>(e, "confidence", where + " keypoint");
    out.push_back(k);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- records

/// Layout annotation of one image: ground truth, or a prediction in the
/// same schema.
struct GroundTruthRecord {
  std::string image_id;
  ImageSize image;
  RoomType room_type{0};
  KeypointSet keypoints;  // image frame
  std::string mask_path;  // relative to the record file
  SegMask mask;

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

/// Checks that the keypoint ids are exactly those of the room type.
inline void validate_type_ids(RoomType t, const KeypointSet& k, const std::string& where) {
  const auto want = keypoint_ids_of_type(t);
  for (const auto& p : k.points)
    if (std::find(want.begin(), want.end(), p.id) == want.end())
      throw ValidationError(where + ": keypoint id " + std::to_string(p.id) + " is not valid for room type " +
                            std::to_string(t.id));
  for (int id : want)
    if (!k.find(id))
      throw ValidationError(where + ": keypoint id " + std::to_string(id) + " missing for room type " +
                            std::to_string(t.id));
}

/// Layout part of a record (no mask): ids, size, type and keypoints.
struct LayoutRecord {
  std::string image_id;
  ImageSize image;
  RoomType room_type{0};
  KeypointSet keypoints;

  Layout layout(GroupBWallMapping mapping = GroupBWallMapping::LeftCenter) const {
    return build_layout(keypoints.group, keypoints, type_has_floor(room_type), type_has_ceiling(room_type), image,
                        mapping);
  }
};

inline LayoutRecord layout_record_from_json(const Json& j, const std::string& where) {
  LayoutRecord r;
  r.image_id = detail::get<std::string>(j, "image_id", where);
  r.image = {detail::get<int>(j, "width", where), detail::get<int>(j, "height", where)};
  if (r.image.empty()) throw ValidationError(where + ": width and height must be positive");
  const int type = detail::get<int>(j, "room_type", where);
  if (type < 0 || type >= kRoomTypeCount)
    throw ValidationError(where + ": room_type " + std::to_string(type) + " out of range");
  r.room_type = RoomType{type};
  r.keypoints.group = group_of_type(r.room_type);
  r.keypoints.frame = r.image;
  r.keypoints.points = detail::keypoints_from_json(detail::field(j, "keypoints", where), where);
  r.keypoints.sort();
  for (std::size_t i = 1; i < r.keypoints.points.size(); ++i)
    if (r.keypoints.points[i].id == r.keypoints.points[i - 1].id)
      throw ValidationError(where + ": duplicate keypoint id " + std::to_string(r.keypoints.points[i].id));
  validate_type_ids(r.room_type, r.keypoints, where);
  r.keypoints.validate();
  return r;
}

inline LayoutRecord load_layout_record(const fs::path& path) {
  return layout_record_from_json(read_json(path), path.string());
}

inline GroundTruthRecord load_groundtruth(const fs::path& path) {
  const Json j = read_json(path);
  const std::string where = path.string();
  const LayoutRecord lr = layout_record_from_json(j, where);
  GroundTruthRecord r;
  r.image_id = lr.image_id;
  r.image = lr.image;
  r.room_type = lr.room_type;
  r.keypoints = lr.keypoints;
  r.mask_path = detail::get<std::string>(j, "mask", where);
  r.mask = load_mask(path.parent_path() / r.mask_path);
  if (r.mask.size() != r.image)
    throw ValidationError(where + ": mask size " + to_string(r.mask.size()) + " differs from " + to_string(r.image));
  return r;
}

inline Json record_to_json(const GroundTruthRecord& r) {
  Json j;
  j["image_id"] = r.image_id;
  j["width"] = r.image.width;
  j["height"] = r.image.height;
  j["room_type"] = r.room_type.id;
  j["keypoints"] = detail::keypoints_to_json(r.keypoints);
  j["mask"] = r.mask_path;
  return j;
}

/// Writes the record JSON and its mask (at mask_path, relative to `path`).
inline void save_groundtruth(const fs::path& path, const GroundTruthRecord& r) {
  if (r.mask_path.empty()) throw ValidationError("record mask path is empty");
  save_mask(path.parent_path() / r.mask_path, r.mask);
  write_json(path, record_to_json(r));
}

// ---------------------------------------------------------------- heatmaps

inline void save_heatmaps(const fs::path& dir, const Heatmap& h) {
  h.validate();
  fs::create_directories(dir);
  for (std::size_t c = 0; c < h.channels.size(); ++c) {
    RawImage img{h.width, h.height, 1, 16, {}};
    img.samples.resize(h.channels[c].size());
    for (std::size_t i = 0; i < img.samples.size(); ++i)
      img.samples[i] = static_cast<std::uint16_t>(std::lround(static_cast<double>(h.channels[c][i]) * 65535.0));
    write_png(dir / ("kp_" + std::to_string(c + 1) + ".png"), img);
  }
  Json meta;
  meta["group"] = std::string(1, group_tag(h.group));
  meta["sigma"] = h.sigma;
  meta["width"] = h.width;
  meta["height"] = h.height;
  meta["channels"] = h.channels.size();
  write_json(dir / "meta.json", meta);
}

inline Heatmap load_heatmaps(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const Json meta = read_json(meta_path);
  const std::string where = meta_path.string();
  Heatmap h;
  h.group = parse_group(detail::get<std::string>(meta, "group", where));
  h.sigma = detail::get<double>(meta, "sigma", where);
  h.width = detail::get<int>(meta, "width", where);
  h.height = detail::get<int>(meta, "height", where);
  const int channels = detail::get<int>(meta, "channels", where);
  const int expected = group_info(h.group).prototype_keypoint_count;
  if (channels != expected)
    throw ValidationError(where + ": heatmap channel count " + std::to_string(channels) + " does not match group " +
                          group_tag(h.group) + " prototype (" + std::to_string(expected) + ")");
  for (int c = 1; c <= channels; ++c) {
    const fs::path p = dir / ("kp_" + std::to_string(c) + ".png");
    const RawImage img = read_png(p);
    if (img.channels != 1 || img.bit_depth != 16)
      throw ValidationError(p.string() + ": heatmap channel must be a 16-bit single-channel PNG");
    if (img.width != h.width || img.height != h.height)
      throw ValidationError(p.string() + ": channel size differs from meta.json");
    std::vector<float> ch(img.samples.size());
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = static_cast<float>(img.samples[i] / 65535.0);
    h.channels.push_back(std::move(ch));
  }
  h.validate();
  return h;
}

/// Heatmap values after a save/load cycle.
inline Heatmap quantize(Heatmap h) {
  for (auto& c : h.channels)
    for (auto& v : c) v = static_cast<float>(std::lround(static_cast<double>(v) * 65535.0) / 65535.0);
  return h;
}

// ---------------------------------------------------------------- bundles

struct PredictionBundle {
  std::string image_id;
  ImageSize image;
  std::array<HypothesisInput, 3> inputs;  // indexed by group
};

inline void save_prediction_bundle(const fs::path& dir, const PredictionBundle& b) {
  fs::create_directories(dir);
  for (Group g : kAllGroups) {
    const auto& in = b.inputs[static_cast<std::size_t>(g)];
    if (in.group != g) throw ValidationError("bundle inputs must be ordered A, B, C");
    const fs::path sub = dir / std::string(1, group_tag(g));
    save_mask(sub / "segmentation.png", in.segmentation);
    save_heatmaps(sub / "heatmaps", in.heatmaps);
  }
  Json j;
  j["image_id"] = b.image_id;
  j["width"] = b.image.width;
  j["height"] = b.image.height;
  write_json(dir / "bundle.json", j);
}

inline PredictionBundle load_prediction_bundle(const fs::path& dir) {
  const fs::path meta_path = dir / "bundle.json";
  const Json j = read_json(meta_path);
  const std::string where = meta_path.string();
  PredictionBundle b;
  b.image_id = detail::get<std::string>(j, "image_id", where);
  b.image = {detail::get<int>(j, "width", where), detail::get<int>(j, "height", where)};
  if (b.image.empty()) throw ValidationError(where + ": width and height must be positive");
  for (Group g : kAllGroups) {
    const fs::path sub = dir / std::string(1, group_tag(g));
    if (!fs::is_directory(sub)) throw ValidationError(std::string("hypothesis ") + group_tag(g) + " absent");
    auto& in = b.inputs[static_cast<std::size_t>(g)];
    in.group = g;
    in.segmentation = load_mask(sub / "segmentation.png");
    in.heatmaps = load_heatmaps(sub / "heatmaps");
    if (in.heatmaps.group != g)
      throw ValidationError(sub.string() + ": heatmap group " + group_tag(in.heatmaps.group) + " in directory " +
                            group_tag(g));
  }
  for (Group g : {Group::B, Group::C}) {
    const auto& in = b.inputs[static_cast<std::size_t>(g)];
    if (in.segmentation.size() != b.inputs[0].segmentation.size() ||
        in.heatmaps.size() != b.inputs[0].heatmaps.size())
      throw ValidationError(std::string("hypothesis ") + group_tag(g) + " resolution differs from hypothesis A");
  }
  return b;
}

// ---------------------------------------------------------------- selection report

struct HypothesisReport {
  Group group = Group::A;
  bool ok = false;
  bool floor_present = false;
  bool ceiling_present = false;
  std::optional<HypothesisScore> score;
  std::string failure;

  friend bool operator==(const HypothesisReport&, const HypothesisReport&) = default;
};

struct SelectionReport {
  std::string image_id;
  ImageSize image;
  RoomType room_type{0};
  Group group = Group::A;
  bool floor_present = false;
  bool ceiling_present = false;
  KeypointSet keypoints;  // image frame
  std::string mask_path;
  std::array<HypothesisReport, 3> hypotheses;

  friend bool operator==(const SelectionReport&, const SelectionReport&) = default;
};

inline SelectionReport make_report(const SelectionResult& r, const std::string& image_id) {
  SelectionReport rep;
  rep.image_id = image_id;
  rep.image = r.image;
  rep.group = r.chosen;
  rep.floor_present = r.layout.floor_present;
  rep.ceiling_present = r.layout.ceiling_present;
  rep.room_type = *r.layout.room_type();
  rep.keypoints = r.layout.keypoints;
  rep.mask_path = image_id + "_layout.png";
  for (Group g : kAllGroups) {
    const auto& h = r.outcome(g);
    auto& out = rep.hypotheses[static_cast<std::size_t>(g)];
    out.group = g;
    out.ok = h.ok();
    out.floor_present = h.floor_present;
    out.ceiling_present = h.ceiling_present;
    out.score = h.score;
    out.failure = h.failure;
  }
  return rep;
}

inline Json score_to_json(const HypothesisScore& s) {
  Json j;
  j["matching_regions"] = s.matching_regions;
  j["mean_iou"] = s.mean_iou;
  j["lambda"] = s.lambda;
  j["total"] = s.total;
  Json iou = Json::object();
  for (std::size_t l = 1; l < kLabelCount; ++l)
    if (s.iou[l]) iou[std::string(label_name(static_cast<SemanticLabel>(l)))] = *s.iou[l];
  j["iou"] = iou;
  return j;
}

inline HypothesisScore score_from_json(const Json& j, const std::string& where) {
  HypothesisScore s;
  s.matching_regions = detail::get<int>(j, "matching_regions", where);
  s.mean_iou = detail::get<double>(j, "mean_iou", where);
  s.lambda = detail::get<double>(j, "lambda", where);
  s.total = detail::get<double>(j, "total", where);
  const Json& iou = detail::field(j, "iou", where);
  for (std::size_t l = 1; l < kLabelCount; ++l) {
    const std::string name(label_name(static_cast<SemanticLabel>(l)));
    if (iou.contains(name)) s.iou[l] = iou.at(name).get<double>();
  }
  return s;
}

inline Json report_to_json(const SelectionReport& r) {
  Json j;
  j["image_id"] = r.image_id;
  j["width"] = r.image.width;
  j["height"] = r.image.height;
  j["room_type"] = r.room_type.id;
  j["keypoints"] = detail::keypoints_to_json(r.keypoints);
  j["mask"] = r.mask_path;
  j["group"] = std::string(1, group_tag(r.group));
  j["floor_present"] = r.floor_present;
  j["ceiling_present"] = r.ceiling_present;
  Json hyps = Json::array();
  for (const auto& h : r.hypotheses) {
    Json e;
    e["group"] = std::string(1, group_tag(h.group));
    e["ok"] = h.ok;
    e["floor_present"] = h.floor_present;
    e["ceiling_present"] = h.ceiling_present;
    if (h.score) e["score"] = score_to_json(*h.score);
    if (!h.failure.empty()) e["failure"] = h.failure;
    hyps.push_back(e);
  }
  j["hypotheses"] = hyps;
  return j;
}

/// Writes <dir>/<image_id>.json and the chosen layout mask.
inline fs::path save_selection(const fs::path& dir, const SelectionResult& result, const std::string& image_id) {
  const SelectionReport rep = make_report(result, image_id);
  save_mask(dir / rep.mask_path, rasterize(result.layout, result.image));
  const fs::path path = dir / (image_id + ".json");
  write_json(path, report_to_json(rep));
  return path;
}

inline SelectionReport load_selection(const fs::path& path) {
  const Json j = read_json(path);
  const std::string where = path.string();
  SelectionReport r;
  r.image_id = detail::get<std::string>(j, "image_id", where);
  r.image = {detail::get<int>(j, "width", where), detail::get<int>(j, "height", where)};
  r.room_type = RoomType{detail::get<int>(j, "room_type", where)};
  r.group = parse_group(detail::get<std::string>(j, "group", where));
  if (group_of_type(r.room_type) != r.group) throw ValidationError(where + ": room_type does not belong to group");
  r.floor_present = detail::get<bool>(j, "floor_present", where);
  r.ceiling_present = detail::get<bool>(j, "ceiling_present", where);
  r.keypoints.group = r.group;
  r.keypoints.frame = r.image;
  r.keypoints.points = detail::keypoints_from_json(detail::field(j, "keypoints", where), where);
  validate_type_ids(r.room_type, r.keypoints, where);
  r.mask_path = detail::get<std::string>(j, "mask", where);
  const Json& hyps = detail::field(j, "hypotheses", where);
  if (!hyps.is_array() || hyps.size() != 3) throw ValidationError(where + ": expected three hypotheses");
  for (std::size_t i = 0; i < 3; ++i) {
    auto& h = r.hypotheses[i];
    h.group = parse_group(detail::get<std::string>(hyps[i], "group", where));
    h.ok = detail::get<bool>(hyps[i], "ok", where);
    h.floor_present = detail::get<bool>(hyps[i], "floor_present", where);
    h.ceiling_present = detail::get<bool>(hyps[i], "ceiling_present", where);
    if (hyps[i].contains("score")) h.score = score_from_json(hyps[i].at("score"), where);
    if (hyps[i].contains("failure")) h.failure = hyps[i].at("failure").get<std::string>();
  }
  return r;
}

// ---------------------------------------------------------------- metrics report

inline Json metrics_to_json(const MetricsReport& m) {
  Json j;
  j["pixel_error_pct"] = m.pixel_error_pct;
  j["keypoint_error_pct"] = m.keypoint_error_pct;
  j["image_count"] = m.image_count;
  j["skipped"] = m.skipped;
  Json rows = Json::array();
  for (const auto& im : m.images) {
    Json e;
    e["image_id"] = im.image_id;
    e["ok"] = im.ok;
    if (im.ok) {
      e["pixel_error_pct"] = im.pixel_error_pct;
      e["keypoint_error_pct"] = im.keypoint_error_pct;
    } else {
      e["error"] = im.error;
    }
    rows.push_back(e);
  }
  j["images"] = rows;
  return j;
}

// ---------------------------------------------------------------- depth

inline constexpr char kDepthMagic[8] = {'R', 'L', 'D', 'E', 'P', 'T', 'H', '1'};

inline void save_depth_raster(const fs::path& path, const DepthMap& d) {
  std::string bytes(kDepthMagic, sizeof kDepthMagic);
  auto put32 = [&bytes](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put32(static_cast<std::uint32_t>(d.width));
  put32(static_cast<std::uint32_t>(d.height));
  for (double v : d.depth) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put32(u);
  }
  detail::write_file(path, bytes);
}

inline DepthMap load_depth_raster(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kDepthMagic, 8) != 0)
    throw ValidationError(path.string() + ": not a depth raster");
  auto get32 = [&bytes](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  };
  DepthMap d;
  d.width = static_cast<int>(get32(8));
  d.height = static_cast<int>(get32(12));
  const std::size_t n = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height);
  if (d.width <= 0 || d.height <= 0 || bytes.size() != 16 + 4 * n)
    throw ValidationError(path.string() + ": truncated depth raster");
  d.depth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = get32(16 + 4 * i);
    float f;
    std::memcpy(&f, &u, 4);
    d.depth[i] = f;
  }
  d.min = *std::min_element(d.depth.begin(), d.depth.end());
  d.max = *std::max_element(d.depth.begin(), d.depth.end());
  return d;
}

/// 16-bit visualization, min depth -> 0 and max depth -> 65535.
inline void save_depth_png(const fs::path& path, const DepthMap& d) {
  RawImage img{d.width, d.height, 1, 16, {}};
  img.samples.resize(d.depth.size());
  const double span = d.max - d.min;
  for (std::size_t i = 0; i < d.depth.size(); ++i)
    img.samples[i] =
        span > 0.0 ? static_cast<std::uint16_t>(std::lround((d.depth[i] - d.min) / span * 65535.0)) : 0;
  write_png(path, img);
}

// ---------------------------------------------------------------- overlay

/// Any PNG as 8-bit RGB.
inline RawImage to_rgb8(const RawImage& in) {
  RawImage out{in.width, in.height, 3, 8, {}};
  out.samples.resize(static_cast<std::size_t>(in.width) * in.height * 3);
  const int color_channels = in.channels >= 3 ? 3 : 1;
  for (std::size_t p = 0; p < static_cast<std::size_t>(in.width) * in.height; ++p)
    for (int c = 0; c < 3; ++c) {
      std::uint16_t v = in.samples[p * static_cast<std::size_t>(in.channels) +
                                   static_cast<std::size_t>(color_channels == 3 ? c : 0)];
      if (in.bit_depth == 16) v = static_cast<std::uint16_t>(v >> 8);
      out.samples[p * 3 + static_cast<std::size_t>(c)] = v;
    }
  return out;
}

/// Draws the layout edges (scaled to the image) as 1-pixel lines.
inline void draw_layout(RawImage& rgb, const Layout& layout, std::array<std::uint8_t, 3> color = {255, 0, 0}) {
  if (rgb.channels != 3 || rgb.bit_depth != 8) throw ValidationError("overlay needs an 8-bit RGB image");
  const ImageSize size{rgb.width, rgb.height};
  const Layout l = layout.image == size ? layout
                                        : build_layout(layout.group, rescale_keypoints(layout.keypoints, size),
                                                       layout.floor_present, layout.ceiling_present, size,
                                                       layout.b_mapping);
  for (const auto& e : edges_of_layout(l)) {
    const Vec2 a = e.segment.a, b = e.segment.b;
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() * 2.0)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = a + (b - a) * (static_cast<double>(s) / steps);
      const int x = std::clamp(static_cast<int>(std::floor(p.x())), 0, rgb.width - 1);
      const int y = std::clamp(static_cast<int>(std::floor(p.y())), 0, rgb.height - 1);
      const std::size_t idx = (static_cast<std::size_t>(y) * rgb.width + x) * 3;
      for (int c = 0; c < 3; ++c) rgb.samples[idx + static_cast<std::size_t>(c)] = color[static_cast<std::size_t>(c)];
    }
  }
}

}  // namespace roomlayout::io
