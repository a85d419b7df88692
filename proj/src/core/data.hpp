// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Dataset plumbing: Cityscapes-style loading and class remapping, the
// synthetic road-scene generator, and deterministic batching.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatmap.hpp"
#include "network.hpp"
#include "ops.hpp"
#include "png_io.hpp"
#include "tensor.hpp"

namespace dhs::data {

inline constexpr std::int32_t kBackground = 0;
inline constexpr std::int32_t kFreespace = 1;
inline constexpr std::int32_t kVehicle = 2;
inline constexpr std::int32_t kPedestrian = 3;
inline constexpr std::size_t kSegClasses = 4;

/// Heatmap channel of a segmentation class (freespace 0, vehicle 1,
/// pedestrian 2), or -1 for classes without instances.
int heat_class_for(std::int32_t seg_class);

enum class LabelSpace { kSource, kTarget };

struct Sample {
  Tensor<float> image;  // [3, H, W], values in [0, 1]
  ops::LabelMap labels;  // [H, W]
  LabelSpace label_space = LabelSpace::kTarget;
  std::vector<heatmap::InstanceAnnotation> annotations;
  std::string id;

  std::size_t height() const { return image.dim(1); }
  std::size_t width() const { return image.dim(2); }
};

class ClassMap {
 public:
  ClassMap() = default;

  /// `source target` per line, `#` comments, optional `default <id>` and
  /// `ignore <id>` lines.
  static ClassMap parse(std::string_view text);
  static ClassMap load(const std::string& path);
  /// Cityscapes label ids onto background / freespace / vehicle / pedestrian.
  static ClassMap cityscapes();

  void set(std::int32_t source, std::int32_t target) { table_[source] = target; }
  void set_default(std::int32_t target) { default_ = target; }
  std::int32_t ignore_id() const { return ignore_; }

  // Unlisted ids take the default, or the ignore id when there is none.
  std::int32_t map(std::int32_t source) const;

 private:
  std::map<std::int32_t, std::int32_t> table_;
  std::optional<std::int32_t> default_;
  std::int32_t ignore_ = ops::kIgnoreId;
};

/// Remaps source-space labels to target classes; target-space samples are
/// left untouched, so applying twice equals applying once.
void apply_class_map(Sample& sample, const ClassMap& class_map);

/// Instance ids >= 1000 follow the Cityscapes `label * 1000 + n` encoding;
/// smaller ids carry no instance. One annotation per instance id whose
/// remapped class has a heatmap channel.
std::vector<heatmap::InstanceAnnotation> instance_annotations(const png::Image& instances, const ClassMap& class_map);

Sample load_cityscapes_sample(const std::string& image_path, const std::string& label_path,
                              const std::optional<std::string>& instance_path, const ClassMap& class_map,
                              std::size_t pad_multiple = 64);

/// Zero-pads bottom/right to multiples of `multiple`; padded labels are ignore.
void pad_sample(Sample& sample, std::size_t multiple);

/// Box-filtered image, per-block majority label, scaled boxes.
Sample downscale_sample(const Sample& sample, std::size_t factor);

/// Window [y, y+h) x [x, x+w); boxes are clipped and dropped when empty.
Sample crop_sample(const Sample& sample, std::size_t y, std::size_t x, std::size_t h, std::size_t w);

struct DatasetOptions {
  std::size_t downscale = 4;
  std::size_t crop = 128;  // 0 keeps the full (downscaled) frame
  std::uint64_t crop_seed = 0;
  std::size_t pad_multiple = 64;
};

/// Loads `<root>/images/*.png` with `<root>/labels/*.png` and optional
/// `<root>/instances/*.png`, matched by stem (Cityscapes suffixes such as
/// `_leftImg8bit` and `_gtFine_labelIds` are ignored when matching).
std::vector<Sample> load_dataset_dir(const std::string& root, const ClassMap& class_map,
                                     const DatasetOptions& options = {});

struct SyntheticShape {
  std::int32_t seg_class = 0;
  std::vector<std::uint8_t> mask;  // H*W, 1 where the shape was rasterized
  heatmap::BBox bbox;
};

struct SyntheticScene {
  Sample sample;
  std::vector<SyntheticShape> shapes;  // same order as sample.annotations
};

SyntheticScene generate_scene(std::uint64_t seed, std::size_t index, std::size_t height, std::size_t width);

/// Scenes first_index .. first_index + count - 1 of the stream for `seed`.
std::vector<Sample> generate_synthetic(std::uint64_t seed, std::size_t count, std::size_t height, std::size_t width,
                                       std::size_t first_index = 0);

class BatchIterator {
 public:
  /// Without a shuffle seed the natural order is kept. The last partial
  /// batch is kept.
  BatchIterator(std::size_t count, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed);

  bool next(std::vector<std::size_t>& indices);
  std::size_t batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

template <typename T>
net::Batch<T> make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices,
                         std::size_t heat_classes, std::size_t heatmap_stride);

}  // namespace dhs::data
