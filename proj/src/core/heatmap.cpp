// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "heatmap.hpp"

#include <algorithm>
#include <cmath>

namespace dhs::heatmap {

double BBox::diagonal() const { return std::hypot(width(), height()); }

void InstanceAnnotation::validate(std::size_t image_h, std::size_t image_w) const {
  require(bbox.x_min < bbox.x_max && bbox.y_min < bbox.y_max, ErrorKind::kData, "annotation box is empty");
  require(bbox.x_min >= 0 && bbox.y_min >= 0 && bbox.x_max <= static_cast<double>(image_w) &&
              bbox.y_max <= static_cast<double>(image_h),
          ErrorKind::kData, "annotation box leaves the image");
}

HeatmapTarget::HeatmapTarget(std::size_t classes, std::size_t grid_h, std::size_t grid_w, std::size_t stride_)
    : map({classes, grid_h, grid_w}), stride(stride_) {}

double default_sigma(const InstanceAnnotation& ann, std::size_t stride) {
  return std::max(1.0, ann.bbox.diagonal() / (6.0 * static_cast<double>(stride)));
}

GridPoint center_cell(const InstanceAnnotation& ann, std::size_t stride) {
  const double r = static_cast<double>(stride);
  const double row = std::floor(ann.center_y() / r), col = std::floor(ann.center_x() / r);
  require(row >= 0 && col >= 0, ErrorKind::kData, "annotation center lies before the grid origin");
  return {static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
}

void gaussian_splat(HeatmapTarget& target, const InstanceAnnotation& ann, double sigma) {
  require(sigma > 0 && std::isfinite(sigma), ErrorKind::kData, "gaussian sigma must be positive");
  require(ann.class_id >= 0 && static_cast<std::size_t>(ann.class_id) < target.classes(), ErrorKind::kData,
          "annotation class " + std::to_string(ann.class_id) + " outside heatmap classes");
  const GridPoint center = center_cell(ann, target.stride);
  require(center.row < target.grid_h() && center.col < target.grid_w(), ErrorKind::kData,
          "annotation center outside heatmap grid");

  const std::size_t gh = target.grid_h(), gw = target.grid_w();
  double* plane = target.map.ptr() + static_cast<std::size_t>(ann.class_id) * gh * gw;
  const double denom = 2.0 * sigma * sigma;
  for (std::size_t y = 0; y < gh; ++y)
    for (std::size_t x = 0; x < gw; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(center.row);
      const double dx = static_cast<double>(x) - static_cast<double>(center.col);
      double& cell = plane[y * gw + x];
      cell = std::max(cell, std::exp(-(dx * dx + dy * dy) / denom));
    }
  plane[center.row * gw + center.col] = 1.0;

  const Positive pos{ann.class_id, center};
  if (std::find(target.positives.begin(), target.positives.end(), pos) == target.positives.end())
    target.positives.push_back(pos);
}

HeatmapTarget build_target(const std::vector<InstanceAnnotation>& annotations, std::size_t image_h,
                           std::size_t image_w, std::size_t stride, std::size_t classes,
                           const SigmaRule& sigma_rule) {
  require(stride >= 1, ErrorKind::kConfig, "heatmap stride must be positive");
  require(image_h % stride == 0 && image_w % stride == 0, ErrorKind::kShape,
          "image extents must be multiples of the heatmap stride");
  HeatmapTarget target(classes, image_h / stride, image_w / stride, stride);
  for (const auto& ann : annotations) {
    ann.validate(image_h, image_w);
    gaussian_splat(target, ann, sigma_rule(ann, stride));
  }
  return target;
}

template <typename T>
std::vector<ProposalPoint> extract_peaks(const Tensor<T>& pred, double threshold, std::size_t max_points) {
  require_rank(pred.dims(), 3, "heatmap prediction");
  const std::size_t classes = pred.dim(0), gh = pred.dim(1), gw = pred.dim(2);
  struct Candidate {
    ProposalPoint point;
    std::size_t flat;
  };
  std::vector<Candidate> found;
  for (std::size_t c = 0; c < classes; ++c) {
    const T* plane = pred.ptr() + c * gh * gw;
    for (std::size_t y = 0; y < gh; ++y)
      for (std::size_t x = 0; x < gw; ++x) {
        const T v = plane[y * gw + x];
        if (static_cast<double>(v) < threshold) continue;
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const auto ny = static_cast<std::ptrdiff_t>(y) + dy, nx = static_cast<std::ptrdiff_t>(x) + dx;
            if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(gh) || nx >= static_cast<std::ptrdiff_t>(gw))
              continue;
            if (plane[ny * static_cast<std::ptrdiff_t>(gw) + nx] > v) {
              peak = false;
              break;
            }
          }
        if (peak)
          found.push_back({{static_cast<int>(c), {y, x}, static_cast<double>(v)}, (c * gh + y) * gw + x});
      }
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    if (a.point.score != b.point.score) return a.point.score > b.point.score;
    return a.flat < b.flat;
  });
  std::vector<ProposalPoint> out;
  for (std::size_t i = 0; i < found.size() && i < max_points; ++i) out.push_back(found[i].point);
  return out;
}

template std::vector<ProposalPoint> extract_peaks<float>(const Tensor<float>&, double, std::size_t);
template std::vector<ProposalPoint> extract_peaks<double>(const Tensor<double>&, double, std::size_t);

}  // namespace dhs::heatmap
