// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tensor.hpp"

namespace dhs::heatmap {

/// Axis-aligned box in input-image pixels; max edges are exclusive.
struct BBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double diagonal() const;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct InstanceAnnotation {
  int class_id = 0;
  BBox bbox;

  double center_x() const { return 0.5 * (bbox.x_min + bbox.x_max); }
  double center_y() const { return 0.5 * (bbox.y_min + bbox.y_max); }
  // Throws a data error unless the box is non-empty and inside the image.
  void validate(std::size_t image_h, std::size_t image_w) const;
};

struct GridPoint {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct Positive {
  int class_id = 0;
  GridPoint point;
  friend bool operator==(const Positive&, const Positive&) = default;
};

/// Per-class Gaussian target on the stride-R grid, map dims [C_h, H/R, W/R].
struct HeatmapTarget {
  Tensor<double> map;
  std::vector<Positive> positives;
  std::size_t stride = 4;

  HeatmapTarget() = default;
  HeatmapTarget(std::size_t classes, std::size_t grid_h, std::size_t grid_w, std::size_t stride_);

  std::size_t classes() const { return map.dim(0); }
  std::size_t grid_h() const { return map.dim(1); }
  std::size_t grid_w() const { return map.dim(2); }
};

struct ProposalPoint {
  int class_id = 0;
  GridPoint point;
  double score = 0;
};

/// Maps an annotation to its kernel width in grid cells.
using SigmaRule = std::function<double(const InstanceAnnotation&, std::size_t stride)>;

/// sigma = max(1, diag / (6 R)) grid cells, diag the bbox diagonal in pixels.
double default_sigma(const InstanceAnnotation& ann, std::size_t stride);

/// Grid cell holding the annotation center: floor(c / R) per axis.
GridPoint center_cell(const InstanceAnnotation& ann, std::size_t stride);

/// Max-combines exp(-d^2 / (2 sigma^2)) into the annotation's class channel,
/// d measured in grid cells from the center cell.
void gaussian_splat(HeatmapTarget& target, const InstanceAnnotation& ann, double sigma);

HeatmapTarget build_target(const std::vector<InstanceAnnotation>& annotations, std::size_t image_h,
                           std::size_t image_w, std::size_t stride, std::size_t classes,
                           const SigmaRule& sigma_rule = default_sigma);

/// Local maxima (>= all existing 8-neighbors) at or above threshold, sorted
/// by score descending then flat index; pred dims [C_h, Hr, Wr].
template <typename T>
std::vector<ProposalPoint> extract_peaks(const Tensor<T>& pred, double threshold, std::size_t max_points);

}  // namespace dhs::heatmap
