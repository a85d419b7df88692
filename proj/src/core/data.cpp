// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <random>

#include "text.hpp"

namespace dhs::data {

namespace fs = std::filesystem;

int heat_class_for(std::int32_t seg_class) {
  switch (seg_class) {
    case kFreespace: return 0;
    case kVehicle: return 1;
    case kPedestrian: return 2;
    default: return -1;
  }
}

ClassMap ClassMap::parse(std::string_view text) {
  ClassMap map;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(text, '\n')) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    for (char& c : line)
      if (c == '\t' || c == '\r') c = ' ';
    line = text::trim(line);
    if (line.empty()) continue;
    const auto sep = line.find(' ');
    require(sep != std::string::npos, ErrorKind::kConfig,
            "class map line " + std::to_string(line_no) + ": expected two fields");
    const std::string key = line.substr(0, sep);
    const std::string value = text::trim(std::string_view(line).substr(sep + 1));
    const auto target = static_cast<std::int32_t>(text::parse_int(value, "class map target"));
    if (key == "default") {
      map.default_ = target;
    } else if (key == "ignore") {
      map.ignore_ = target;
    } else {
      map.table_[static_cast<std::int32_t>(text::parse_int(key, "class map source"))] = target;
    }
  }
  return map;
}

ClassMap ClassMap::load(const std::string& path) { return parse(text::read_file(path)); }

ClassMap ClassMap::cityscapes() {
  ClassMap map;
  for (std::int32_t id : {0, 1, 2, 3}) map.set(id, ops::kIgnoreId);
  map.set(7, kFreespace);
  for (std::int32_t id : {26, 27, 28, 29, 30, 32}) map.set(id, kVehicle);
  for (std::int32_t id : {24, 25}) map.set(id, kPedestrian);
  map.set_default(kBackground);
  return map;
}

std::int32_t ClassMap::map(std::int32_t source) const {
  if (auto it = table_.find(source); it != table_.end()) return it->second;
  return default_.value_or(ignore_);
}

void apply_class_map(Sample& sample, const ClassMap& class_map) {
  if (sample.label_space == LabelSpace::kTarget) return;
  for (auto& v : sample.labels.data()) v = class_map.map(v);
  sample.label_space = LabelSpace::kTarget;
}

std::vector<heatmap::InstanceAnnotation> instance_annotations(const png::Image& instances,
                                                              const ClassMap& class_map) {
  require(instances.channels == 1, ErrorKind::kData, "instance map must be single-channel");
  struct Extent {
    std::size_t x0, y0, x1, y1;
  };
  std::map<std::uint16_t, Extent> extents;
  for (std::size_t y = 0; y < instances.height; ++y) {
    for (std::size_t x = 0; x < instances.width; ++x) {
      const std::uint16_t id = instances.at(y, x, 0);
      if (id < 1000) continue;
      auto [it, fresh] = extents.try_emplace(id, Extent{x, y, x, y});
      if (!fresh) {
        Extent& e = it->second;
        e.x0 = std::min(e.x0, x);
        e.x1 = std::max(e.x1, x);
        e.y0 = std::min(e.y0, y);
        e.y1 = std::max(e.y1, y);
      }
    }
  }
  std::vector<heatmap::InstanceAnnotation> out;
  for (const auto& [id, e] : extents) {
    const int heat = heat_class_for(class_map.map(static_cast<std::int32_t>(id / 1000)));
    if (heat < 0) continue;
    out.push_back({heat,
                   {static_cast<double>(e.x0), static_cast<double>(e.y0), static_cast<double>(e.x1 + 1),
                    static_cast<double>(e.y1 + 1)}});
  }
  return out;
}

Sample load_cityscapes_sample(const std::string& image_path, const std::string& label_path,
                              const std::optional<std::string>& instance_path, const ClassMap& class_map,
                              std::size_t pad_multiple) {
  const png::Image image = png::read(image_path);
  const png::Image labels = png::read(label_path);
  require(image.channels == 3 && image.bit_depth == 8, ErrorKind::kData, image_path + ": expected 8-bit RGB");
  require(labels.channels == 1, ErrorKind::kData, label_path + ": expected a single-channel id map");
  require(labels.width == image.width && labels.height == image.height, ErrorKind::kData,
          label_path + ": size differs from the image");

  const std::size_t h = image.height, w = image.width;
  Sample s;
  s.id = fs::path(image_path).stem().string();
  s.image = Tensor<float>({3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) s.image[(c * h + y) * w + x] = static_cast<float>(image.at(y, x, c)) / 255.0f;
  s.labels = ops::LabelMap({h, w});
  for (std::size_t i = 0; i < h * w; ++i) s.labels[i] = static_cast<std::int32_t>(labels.samples[i]);
  s.label_space = LabelSpace::kSource;
  apply_class_map(s, class_map);

  if (instance_path) {
    const png::Image inst = png::read(*instance_path);
    require(inst.width == w && inst.height == h, ErrorKind::kData, *instance_path + ": size differs from the image");
    s.annotations = instance_annotations(inst, class_map);
  }
  pad_sample(s, pad_multiple);
  return s;
}

void pad_sample(Sample& sample, std::size_t multiple) {
  require(multiple >= 1, ErrorKind::kConfig, "pad multiple must be >= 1");
  const std::size_t h = sample.height(), w = sample.width();
  const std::size_t ph = (h + multiple - 1) / multiple * multiple, pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return;
  Tensor<float> image({3, ph, pw});
  ops::LabelMap labels({ph, pw}, ops::kIgnoreId);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t c = 0; c < 3; ++c)
      std::copy_n(sample.image.ptr() + (c * h + y) * w, w, image.ptr() + (c * ph + y) * pw);
    std::copy_n(sample.labels.ptr() + y * w, w, labels.ptr() + y * pw);
  }
  sample.image = std::move(image);
  sample.labels = std::move(labels);
}

Sample downscale_sample(const Sample& sample, std::size_t factor) {
  require(factor >= 1, ErrorKind::kConfig, "downscale factor must be >= 1");
  if (factor == 1) return sample;
  const std::size_t h = sample.height(), w = sample.width();
  const std::size_t oh = h / factor, ow = w / factor;
  require(oh >= 1 && ow >= 1, ErrorKind::kData, "image smaller than the downscale factor");

  Sample out;
  out.id = sample.id;
  out.label_space = sample.label_space;
  out.image = Tensor<float>({3, oh, ow});
  out.labels = ops::LabelMap({oh, ow});
  const double inv_area = 1.0 / static_cast<double>(factor * factor);
  std::map<std::int32_t, std::size_t> votes;
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < factor; ++dy)
          for (std::size_t dx = 0; dx < factor; ++dx)
            sum += sample.image[(c * h + y * factor + dy) * w + x * factor + dx];
        out.image[(c * oh + y) * ow + x] = static_cast<float>(sum * inv_area);
      }
      votes.clear();
      for (std::size_t dy = 0; dy < factor; ++dy)
        for (std::size_t dx = 0; dx < factor; ++dx) ++votes[sample.labels[(y * factor + dy) * w + x * factor + dx]];
      // Ties go to the smallest id (map order).
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it)
        if (it->second > best->second) best = it;
      out.labels[y * ow + x] = best->first;
    }
  }
  const double f = static_cast<double>(factor);
  for (const auto& ann : sample.annotations) {
    heatmap::InstanceAnnotation a = ann;
    a.bbox = {ann.bbox.x_min / f, ann.bbox.y_min / f, std::min(ann.bbox.x_max / f, static_cast<double>(ow)),
              std::min(ann.bbox.y_max / f, static_cast<double>(oh))};
    if (a.bbox.x_min < a.bbox.x_max && a.bbox.y_min < a.bbox.y_max) out.annotations.push_back(a);
  }
  return out;
}

Sample crop_sample(const Sample& sample, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  const std::size_t sh = sample.height(), sw = sample.width();
  require(h >= 1 && w >= 1 && y + h <= sh && x + w <= sw, ErrorKind::kShape, "crop window leaves the image");
  Sample out;
  out.id = sample.id;
  out.label_space = sample.label_space;
  out.image = Tensor<float>({3, h, w});
  out.labels = ops::LabelMap({h, w});
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < 3; ++c)
      std::copy_n(sample.image.ptr() + (c * sh + y + r) * sw + x, w, out.image.ptr() + (c * h + r) * w);
    std::copy_n(sample.labels.ptr() + (y + r) * sw + x, w, out.labels.ptr() + r * w);
  }
  const double fx = static_cast<double>(x), fy = static_cast<double>(y);
  for (const auto& ann : sample.annotations) {
    heatmap::InstanceAnnotation a = ann;
    a.bbox = {std::max(ann.bbox.x_min - fx, 0.0), std::max(ann.bbox.y_min - fy, 0.0),
              std::min(ann.bbox.x_max - fx, static_cast<double>(w)),
              std::min(ann.bbox.y_max - fy, static_cast<double>(h))};
    if (a.bbox.x_min < a.bbox.x_max && a.bbox.y_min < a.bbox.y_max) out.annotations.push_back(a);
  }
  return out;
}

namespace {

std::string match_key(const fs::path& p) {
  std::string stem = p.stem().string();
  for (std::string_view suffix : {"_leftImg8bit", "_gtFine_labelIds", "_gtFine_instanceIds", "_gtCoarse_labelIds",
                                  "_gtCoarse_instanceIds"}) {
    if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
      stem.resize(stem.size() - suffix.size());
      break;
    }
  }
  return stem;
}

std::map<std::string, fs::path> index_pngs(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const auto [it, fresh] = out.emplace(match_key(entry.path()), entry.path());
    require(fresh, ErrorKind::kData, "two files share the stem " + it->first + " in " + dir.string());
  }
  return out;
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), salt};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<Sample> load_dataset_dir(const std::string& root, const ClassMap& class_map,
                                     const DatasetOptions& options) {
  const fs::path base(root);
  require(fs::is_directory(base / "images"), ErrorKind::kData, root + ": missing images/ directory");
  require(fs::is_directory(base / "labels"), ErrorKind::kData, root + ": missing labels/ directory");
  const auto images = index_pngs(base / "images");
  const auto labels = index_pngs(base / "labels");
  std::map<std::string, fs::path> instances;
  if (fs::is_directory(base / "instances")) instances = index_pngs(base / "instances");
  require(!images.empty(), ErrorKind::kData, root + ": no images");

  std::vector<Sample> out;
  std::size_t index = 0;
  for (const auto& [key, image_path] : images) {
    const auto label = labels.find(key);
    require(label != labels.end(), ErrorKind::kData, "no label map for " + image_path.string());
    std::optional<std::string> inst;
    if (auto it = instances.find(key); it != instances.end()) inst = it->second.string();
    Sample s = load_cityscapes_sample(image_path.string(), label->second.string(), inst, class_map, 1);
    s.id = key;
    s = downscale_sample(s, options.downscale);
    if (options.crop > 0 && s.height() >= options.crop && s.width() >= options.crop) {
      auto rng = stream_rng(options.crop_seed, index, 0x63726f70u);
      const std::size_t y = std::uniform_int_distribution<std::size_t>(0, s.height() - options.crop)(rng);
      const std::size_t x = std::uniform_int_distribution<std::size_t>(0, s.width() - options.crop)(rng);
      s = crop_sample(s, y, x, options.crop, options.crop);
    }
    pad_sample(s, options.pad_multiple);
    out.push_back(std::move(s));
    ++index;
  }
  return out;
}

namespace {

using Rgb = std::array<double, 3>;

struct Canvas {
  std::size_t h, w;
  std::vector<Rgb> pixels;
  std::vector<std::int32_t> labels;
  std::vector<int> owner;  // index of the shape drawn last at each pixel, -1 for background

  Canvas(std::size_t h_, std::size_t w_, Rgb fill)
      : h(h_), w(w_), pixels(h_ * w_, fill), labels(h_ * w_, kBackground), owner(h_ * w_, -1) {}

  void paint(std::size_t i, const Rgb& rgb, std::int32_t label, int shape) {
    pixels[i] = rgb;
    labels[i] = label;
    owner[i] = shape;
  }
};

heatmap::BBox mask_extent(const std::vector<std::uint8_t>& mask, std::size_t h, std::size_t w) {
  std::size_t x0 = w, y0 = h, x1 = 0, y1 = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask[y * w + x]) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x + 1);
      y1 = std::max(y1, y + 1);
    }
  }
  if (x1 == 0) return {};
  return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1), static_cast<double>(y1)};
}

bool boxes_overlap(const heatmap::BBox& a, const heatmap::BBox& b, double margin) {
  return a.x_min < b.x_max + margin && b.x_min < a.x_max + margin && a.y_min < b.y_max + margin &&
         b.y_min < a.y_max + margin;
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, std::size_t index, std::size_t height, std::size_t width) {
  require(height >= 64 && width >= 64 && height % 64 == 0 && width % 64 == 0, ErrorKind::kConfig,
          "synthetic image dims must be positive multiples of 64");
  auto rng = stream_rng(seed, index, 0x7363656eu);
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double H = static_cast<double>(height), W = static_cast<double>(width);

  const double gray = uni(0.45, 0.6);
  Canvas canvas(height, width, {gray + uni(-0.03, 0.03), gray + uni(-0.03, 0.03), gray + uni(-0.03, 0.03)});
  SyntheticScene scene;

  // Road: trapezoid from a narrow far edge to a wide bottom edge.
  SyntheticShape road{kFreespace, std::vector<std::uint8_t>(height * width, 0), {}};
  const double horizon = uni(0.45, 0.6) * H;
  const double top_cx = uni(0.35, 0.65) * W, top_half = uni(0.08, 0.2) * W;
  const double bottom_left = uni(-0.3, 0.05) * W, bottom_right = uni(0.95, 1.3) * W;
  const double road_v = uni(0.2, 0.3);
  const Rgb road_rgb{road_v, road_v, road_v + 0.03};
  for (std::size_t y = 0; y < height; ++y) {
    const double yc = static_cast<double>(y) + 0.5;
    if (yc < horizon) continue;
    const double t = (yc - horizon) / (H - horizon);
    const double left = (top_cx - top_half) + t * (bottom_left - (top_cx - top_half));
    const double right = (top_cx + top_half) + t * (bottom_right - (top_cx + top_half));
    for (std::size_t x = 0; x < width; ++x) {
      const double xc = static_cast<double>(x) + 0.5;
      if (xc < left || xc > right) continue;
      road.mask[y * width + x] = 1;
      canvas.paint(y * width + x, road_rgb, kFreespace, 0);
    }
  }
  scene.shapes.push_back(std::move(road));

  // Vehicles: axis-aligned rectangles, later ones drawn over earlier ones.
  const int vehicles = std::uniform_int_distribution<int>(1, 3)(rng);
  std::vector<heatmap::BBox> vehicle_boxes;
  for (int v = 0; v < vehicles; ++v) {
    const double vw = uni(0.12, 0.28) * W, vh = uni(0.08, 0.18) * H;
    const double bottom = uni(std::min(horizon + 0.1 * H, H - 1.0), H);
    const double cx = uni(0.1, 0.9) * W;
    const auto x0 = static_cast<std::size_t>(std::clamp(std::lround(cx - vw / 2), 0L, static_cast<long>(width) - 1));
    const auto x1 = static_cast<std::size_t>(std::clamp(std::lround(cx + vw / 2), static_cast<long>(x0) + 1,
                                                        static_cast<long>(width)));
    const auto y0 =
        static_cast<std::size_t>(std::clamp(std::lround(bottom - vh), 0L, static_cast<long>(height) - 1));
    const auto y1 = static_cast<std::size_t>(std::clamp(std::lround(bottom), static_cast<long>(y0) + 1,
                                                        static_cast<long>(height)));
    const Rgb body{uni(0.0, 0.3), uni(0.1, 0.4), uni(0.55, 0.9)};
    const Rgb glass{body[0] * 0.4, body[1] * 0.4, body[2] * 0.5};
    const std::size_t glass_end = y0 + (y1 - y0) / 3;
    SyntheticShape shape{kVehicle, std::vector<std::uint8_t>(height * width, 0), {}};
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) {
        shape.mask[y * width + x] = 1;
        canvas.paint(y * width + x, y < glass_end ? glass : body, kVehicle, static_cast<int>(scene.shapes.size()));
      }
    }
    vehicle_boxes.push_back(
        {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1), static_cast<double>(y1)});
    scene.shapes.push_back(std::move(shape));
  }

  // Pedestrians: thin vertical capsules kept clear of every vehicle.
  const int pedestrians = std::uniform_int_distribution<int>(0, 2)(rng);
  const double scale = H / 128.0;
  for (int p = 0; p < pedestrians; ++p) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double r = uni(1.5, 3.0) * scale, len = uni(0.12, 0.22) * H;
      const double cx = uni(0.05, 0.95) * W;
      const double bottom = uni(std::min(horizon, H - len), H);
      const double top = std::max(bottom - len, 0.0);
      const heatmap::BBox reach{cx - r, top, cx + r, bottom};
      if (std::any_of(vehicle_boxes.begin(), vehicle_boxes.end(),
                      [&](const heatmap::BBox& b) { return boxes_overlap(reach, b, 1.0); }))
        continue;
      const double ya = top + r, yb = std::max(bottom - r, ya);
      const Rgb skin{uni(0.7, 0.95), uni(0.2, 0.45), uni(0.15, 0.35)};
      SyntheticShape shape{kPedestrian, std::vector<std::uint8_t>(height * width, 0), {}};
      for (std::size_t y = 0; y < height; ++y) {
        const double yc = static_cast<double>(y) + 0.5;
        const double dy = yc < ya ? ya - yc : (yc > yb ? yc - yb : 0.0);
        if (dy > r) continue;
        for (std::size_t x = 0; x < width; ++x) {
          const double dx = static_cast<double>(x) + 0.5 - cx;
          if (dx * dx + dy * dy > r * r) continue;
          shape.mask[y * width + x] = 1;
          canvas.paint(y * width + x, skin, kPedestrian, static_cast<int>(scene.shapes.size()));
        }
      }
      vehicle_boxes.push_back(reach);  // keeps later pedestrians disjoint too
      scene.shapes.push_back(std::move(shape));
      break;
    }
  }

  std::normal_distribution<double> noise(0.0, 0.03);
  Sample& s = scene.sample;
  s.id = "synthetic_" + std::to_string(seed) + "_" + std::to_string(index);
  s.image = Tensor<float>({3, height, width});
  s.labels = ops::LabelMap({height, width});
  for (std::size_t i = 0; i < height * width; ++i) {
    for (std::size_t c = 0; c < 3; ++c)
      s.image[c * height * width + i] = static_cast<float>(std::clamp(canvas.pixels[i][c] + noise(rng), 0.0, 1.0));
    s.labels[i] = canvas.labels[i];
  }
  // Masks keep only the visible pixels; fully hidden shapes are dropped.
  for (std::size_t k = 0; k < scene.shapes.size(); ++k) {
    auto& shape = scene.shapes[k];
    for (std::size_t i = 0; i < shape.mask.size(); ++i)
      if (canvas.owner[i] != static_cast<int>(k)) shape.mask[i] = 0;
    shape.bbox = mask_extent(shape.mask, height, width);
  }
  std::erase_if(scene.shapes, [](const SyntheticShape& shape) { return shape.bbox.x_max <= 0; });
  for (const auto& shape : scene.shapes) s.annotations.push_back({heat_class_for(shape.seg_class), shape.bbox});
  return scene;
}

std::vector<Sample> generate_synthetic(std::uint64_t seed, std::size_t count, std::size_t height, std::size_t width,
                                       std::size_t first_index) {
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(seed, first_index + i, height, width).sample);
  return out;
}

BatchIterator::BatchIterator(std::size_t count, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed)
    : order_(count), batch_size_(batch_size) {
  require(count > 0, ErrorKind::kData, "empty dataset");
  require(batch_size > 0, ErrorKind::kConfig, "batch_size must be >= 1");
  for (std::size_t i = 0; i < count; ++i) order_[i] = i;
  if (shuffle_seed) {
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle.
    auto rng = stream_rng(*shuffle_seed, count, 0x73687566u);
    for (std::size_t i = count - 1; i > 0; --i) std::swap(order_[i], order_[rng() % (i + 1)]);
  }
}

bool BatchIterator::next(std::vector<std::size_t>& indices) {
  indices.clear();
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_), order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return true;
}

template <typename T>
net::Batch<T> make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices,
                         std::size_t heat_classes, std::size_t heatmap_stride) {
  require(!indices.empty(), ErrorKind::kData, "empty batch");
  const Sample& first = samples.at(indices[0]);
  const std::size_t n = indices.size(), h = first.height(), w = first.width();
  require(h % heatmap_stride == 0 && w % heatmap_stride == 0, ErrorKind::kShape,
          "sample dims must divide by the heatmap stride");
  const std::size_t gh = h / heatmap_stride, gw = w / heatmap_stride;
  net::Batch<T> batch{Tensor<T>({n, 3, h, w}), ops::LabelMap({n, h, w}), Tensor<T>({n, heat_classes, gh, gw})};
  for (std::size_t b = 0; b < n; ++b) {
    const Sample& s = samples.at(indices[b]);
    require(s.height() == h && s.width() == w, ErrorKind::kShape, "samples in one batch must share dims");
    require(s.label_space == LabelSpace::kTarget, ErrorKind::kData, "sample " + s.id + " has unmapped labels");
    std::transform(s.image.data().begin(), s.image.data().end(), batch.images.ptr() + b * 3 * h * w,
                   [](float v) { return static_cast<T>(v); });
    std::copy(s.labels.data().begin(), s.labels.data().end(), batch.labels.ptr() + b * h * w);
    const auto target = heatmap::build_target(s.annotations, h, w, heatmap_stride, heat_classes);
    std::transform(target.map.data().begin(), target.map.data().end(),
                   batch.heat_target.ptr() + b * heat_classes * gh * gw, [](double v) { return static_cast<T>(v); });
  }
  return batch;
}

template net::Batch<float> make_batch<float>(const std::vector<Sample>&, std::span<const std::size_t>, std::size_t,
                                             std::size_t);
template net::Batch<double> make_batch<double>(const std::vector<Sample>&, std::span<const std::size_t>, std::size_t,
                                               std::size_t);

}  // namespace dhs::data
