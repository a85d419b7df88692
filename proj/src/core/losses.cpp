// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace dhs::loss {

void FocalParams::validate() const {
  require(alpha >= 0 && beta >= 0, ErrorKind::kConfig, "focal alpha and beta must be non-negative");
  require(epsilon > 0 && epsilon <= 1e-3, ErrorKind::kConfig, "focal epsilon must lie in (0, 1e-3]");
}

template <typename T>
FocalResult<T> focal_point_loss(const Tensor<T>& pred, const Tensor<T>& target, const FocalParams& params) {
  params.validate();
  require_dims(target.dims(), pred.dims(), "focal loss target");
  const double eps = params.epsilon, a = params.alpha, b = params.beta;

  FocalResult<T> result{T(0), 0, zeros_like(pred)};
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double raw = static_cast<double>(pred[i]);
    require(raw >= 0.0 && raw <= 1.0, ErrorKind::kNumeric, "heatmap prediction outside [0,1]");
    const double p = std::clamp(raw, eps, 1.0 - eps);
    const double y = static_cast<double>(target[i]);
    double term = 0.0, dterm = 0.0;
    if (y == 1.0) {
      ++result.positives;
      const double q = 1.0 - p;
      term = -std::pow(q, a) * std::log(p);
      dterm = (a == 0.0 ? 0.0 : a * std::pow(q, a - 1.0) * std::log(p)) - std::pow(q, a) / p;
    } else {
      const double reduce = std::pow(1.0 - y, b);
      const double lq = std::log(1.0 - p);
      term = -reduce * std::pow(p, a) * lq;
      dterm = -reduce * ((a == 0.0 ? 0.0 : a * std::pow(p, a - 1.0) * lq) - std::pow(p, a) / (1.0 - p));
    }
    total += term;
    result.grad[i] = static_cast<T>(dterm);
  }
  const double norm = static_cast<double>(std::max<std::size_t>(1, result.positives));
  result.loss = static_cast<T>(total / norm);
  for (T& g : result.grad.data()) g = static_cast<T>(static_cast<double>(g) / norm);
  require(std::isfinite(result.loss), ErrorKind::kNumeric, "focal loss is not finite");
  return result;
}

template <typename T>
FocalResult<T> focal_point_loss(const Tensor<T>& pred, const heatmap::HeatmapTarget& target,
                                const FocalParams& params) {
  return focal_point_loss(pred, target.map.template cast<T>(), params);
}

template <typename T>
CombinedLoss<T> combined_loss(const Tensor<T>& seg_logits, const ops::LabelMap& labels, const Tensor<T>* heat_pred,
                              const Tensor<T>* heat_target, double lambda_point, const FocalParams& params,
                              std::int32_t ignore_id) {
  require(lambda_point >= 0 && std::isfinite(lambda_point), ErrorKind::kConfig, "lambda_point must be >= 0");
  auto ce = ops::softmax_ce(seg_logits, labels, ignore_id);
  CombinedLoss<T> out;
  out.seg = ce.loss;
  out.grad_seg = std::move(ce.grad_logits);
  out.total = out.seg;
  if (heat_pred != nullptr) {
    require(heat_target != nullptr, ErrorKind::kShape, "heatmap prediction without a target");
    auto focal = focal_point_loss(*heat_pred, *heat_target, params);
    out.point = focal.loss;
    out.total = static_cast<T>(static_cast<double>(out.seg) + lambda_point * static_cast<double>(out.point));
    out.grad_heat = std::move(focal.grad);
    for (T& g : out.grad_heat.data()) g = static_cast<T>(static_cast<double>(g) * lambda_point);
  }
  require(std::isfinite(out.total), ErrorKind::kNumeric, "combined loss is not finite");
  return out;
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  require(other.classes() == classes(), ErrorKind::kShape, "cannot merge confusion counts of different class counts");
  for (std::size_t c = 0; c < classes(); ++c) {
    per_class[c].tp += other.per_class[c].tp;
    per_class[c].tn += other.per_class[c].tn;
    per_class[c].fp += other.per_class[c].fp;
    per_class[c].fn += other.per_class[c].fn;
  }
  pixels += other.pixels;
}

void accumulate_confusion(const ops::LabelMap& pred, const ops::LabelMap& gt, ConfusionCounts& counts,
                          std::int32_t ignore_id) {
  require_dims(pred.dims(), gt.dims(), "confusion prediction");
  const auto classes = static_cast<std::int32_t>(counts.classes());
  std::vector<std::uint64_t> pred_hist(counts.classes()), gt_hist(counts.classes()), hits(counts.classes());
  std::uint64_t evaluated = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::int32_t g = gt[i];
    if (g == ignore_id) continue;
    const std::int32_t p = pred[i];
    require(g >= 0 && g < classes, ErrorKind::kData, "ground-truth label " + std::to_string(g) + " out of range");
    require(p >= 0 && p < classes, ErrorKind::kData, "predicted label " + std::to_string(p) + " out of range");
    ++pred_hist[static_cast<std::size_t>(p)];
    ++gt_hist[static_cast<std::size_t>(g)];
    if (p == g) ++hits[static_cast<std::size_t>(g)];
    ++evaluated;
  }
  for (std::size_t c = 0; c < counts.classes(); ++c) {
    ClassCounts& cc = counts.per_class[c];
    const std::uint64_t fp = pred_hist[c] - hits[c], fn = gt_hist[c] - hits[c];
    cc.tp += hits[c];
    cc.fp += fp;
    cc.fn += fn;
    cc.tn += evaluated - hits[c] - fp - fn;
  }
  counts.pixels += evaluated;
}

ConfusionCounts accumulate_confusion(const ops::LabelMap& pred, const ops::LabelMap& gt, std::size_t classes,
                                     std::int32_t ignore_id) {
  ConfusionCounts counts(classes);
  accumulate_confusion(pred, gt, counts, ignore_id);
  return counts;
}

double acc(const ConfusionCounts& counts) {
  std::uint64_t correct = 0, total = 0;
  for (const auto& c : counts.per_class) {
    correct += c.tp + c.tn;
    total += c.total();
  }
  require(total > 0, ErrorKind::kNumeric, "ACC undefined: no evaluated pixels");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string format_report(const ConfusionCounts& counts) {
  std::ostringstream os;
  os << fmt::format("acc = {:.6f}\n", counts.pixels ? acc(counts) : 0.0);
  os << "pixels = " << counts.pixels << "\n";
  os << "classes = " << counts.classes() << "\n";
  for (std::size_t c = 0; c < counts.classes(); ++c) {
    const auto& cc = counts.per_class[c];
    os << fmt::format("class{}.tp = {}\nclass{}.tn = {}\nclass{}.fp = {}\nclass{}.fn = {}\n", c, cc.tp, c, cc.tn, c,
                      cc.fp, c, cc.fn);
  }
  return os.str();
}

std::string csv_header(std::size_t classes) {
  std::string h = "acc,pixels";
  for (std::size_t c = 0; c < classes; ++c) h += fmt::format(",tp{0},tn{0},fp{0},fn{0}", c);
  return h;
}

std::string csv_row(const ConfusionCounts& counts) {
  std::string r = fmt::format("{:.6f},{}", counts.pixels ? acc(counts) : 0.0, counts.pixels);
  for (const auto& cc : counts.per_class) r += fmt::format(",{},{},{},{}", cc.tp, cc.tn, cc.fp, cc.fn);
  return r;
}

#define DHS_INSTANTIATE_LOSSES(T)                                                                                 \
  template FocalResult<T> focal_point_loss<T>(const Tensor<T>&, const Tensor<T>&, const FocalParams&);          \
  template FocalResult<T> focal_point_loss<T>(const Tensor<T>&, const heatmap::HeatmapTarget&,                  \
                                              const FocalParams&);                                              \
  template CombinedLoss<T> combined_loss<T>(const Tensor<T>&, const ops::LabelMap&, const Tensor<T>*,           \
                                            const Tensor<T>*, double, const FocalParams&, std::int32_t);

DHS_INSTANTIATE_LOSSES(float)
DHS_INSTANTIATE_LOSSES(double)

#undef DHS_INSTANTIATE_LOSSES

}  // namespace dhs::loss
