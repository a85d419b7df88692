// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Point focal loss for heatmap heads, the combined training objective, and
// pixel-accuracy metrics from per-class confusion counts.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heatmap.hpp"
#include "ops.hpp"
#include "tensor.hpp"

namespace dhs::loss {

struct FocalParams {
  double alpha = 2.0;
  double beta = 4.0;
  double epsilon = 1e-6;

  void validate() const;
};

template <typename T>
struct FocalResult {
  T loss = 0;
  std::size_t positives = 0;  // cells whose target is exactly 1
  Tensor<T> grad;             // d loss / d pred
};

/// Penalty-reduced focal loss over every cell of pred (any rank; target has
/// the same dims). Positive cells (target == 1) add -(1-p)^a log p, all
/// others add -(1-y)^b p^a log(1-p), with p clamped to [eps, 1-eps]. The
/// sum is divided by max(1, number of positives).
template <typename T>
FocalResult<T> focal_point_loss(const Tensor<T>& pred, const Tensor<T>& target, const FocalParams& params = {});

template <typename T>
FocalResult<T> focal_point_loss(const Tensor<T>& pred, const heatmap::HeatmapTarget& target,
                                const FocalParams& params = {});

template <typename T>
struct CombinedLoss {
  T total = 0;
  T seg = 0;
  T point = 0;
  Tensor<T> grad_seg;
  Tensor<T> grad_heat;  // empty when there is no heatmap stream
};

/// seg cross-entropy + lambda_point * focal loss. heat_pred may be null for
/// models without a heatmap head.
template <typename T>
CombinedLoss<T> combined_loss(const Tensor<T>& seg_logits, const ops::LabelMap& labels, const Tensor<T>* heat_pred,
                              const Tensor<T>* heat_target, double lambda_point, const FocalParams& params = {},
                              std::int32_t ignore_id = ops::kIgnoreId);

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct ConfusionCounts {
  std::vector<ClassCounts> per_class;
  std::uint64_t pixels = 0;  // evaluated (non-ignored) pixels

  explicit ConfusionCounts(std::size_t classes = 0) : per_class(classes) {}
  std::size_t classes() const { return per_class.size(); }
  void merge(const ConfusionCounts& other);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Adds one prediction/ground-truth pair (any matching dims) to counts.
void accumulate_confusion(const ops::LabelMap& pred, const ops::LabelMap& gt, ConfusionCounts& counts,
                          std::int32_t ignore_id = ops::kIgnoreId);
ConfusionCounts accumulate_confusion(const ops::LabelMap& pred, const ops::LabelMap& gt, std::size_t classes,
                                     std::int32_t ignore_id = ops::kIgnoreId);

/// Sum over classes of TP+TN divided by the sum of per-class totals.
double acc(const ConfusionCounts& counts);

std::string format_report(const ConfusionCounts& counts);
std::string csv_header(std::size_t classes);
std::string csv_row(const ConfusionCounts& counts);

}  // namespace dhs::loss
