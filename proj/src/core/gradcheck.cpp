// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "deform.hpp"
#include "losses.hpp"
#include "network.hpp"
#include "ops.hpp"

namespace dhs::grad {

namespace {

using TensorList = std::vector<Tensor<double>>;

std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::mt19937_64 case_rng(std::string_view op, std::uint64_t seed) {
  const std::uint64_t h = name_hash(op);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

Tensor<double> normal(std::mt19937_64& rng, Shape dims, double scale = 1.0) {
  Tensor<double> t(std::move(dims));
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Value whose fractional part lies in [0.1, 0.9], keeping bilinear samples
// away from the hat-function kinks at integers.
double off_integer(std::mt19937_64& rng, double lo, double hi) {
  const double base = std::floor(uniform(rng, lo, hi));
  return base + uniform(rng, 0.1, 0.9);
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Tensor<double> scaled(Tensor<double> t, double s) {
  for (double& v : t.data()) v *= s;
  return t;
}

ops::LabelMap to_labels(const Tensor<double>& t) {
  ops::LabelMap out(t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<std::int32_t>(t[i]);
  return out;
}

GradCase conv2d_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("conv2d", seed);
  const std::size_t stride = 1 + rng() % 2, pad = rng() % 2;
  const auto spec = ops::ConvSpec::square(2, 3, 3, stride, pad);
  GradCase c{"conv2d", seed, {normal(rng, {2, 2, 5, 5}), normal(rng, {3, 2, 3, 3}), normal(rng, {3})}, {}, {}, {}};
  c.forward = [spec](const TensorList& in) { return ops::conv2d_forward(in[0], in[1], in[2], spec); };
  c.backward = [spec, fault](const TensorList& in, const Tensor<double>& g) {
    auto r = ops::conv2d_backward(g, in[0], in[1], spec);
    return TensorList{std::move(r.input), scaled(std::move(r.weights), fault), std::move(r.bias)};
  };
  return c;
}

GradCase transposed_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("transposed_conv2x2", seed);
  GradCase c{"transposed_conv2x2", seed, {normal(rng, {2, 3, 3, 3}), normal(rng, {3, 2, 2, 2}), normal(rng, {2})}, {},
             {}, {}};
  c.forward = [](const TensorList& in) { return ops::transposed_conv2x2_forward(in[0], in[1], in[2]); };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    auto r = ops::transposed_conv2x2_backward(g, in[0], in[1]);
    return TensorList{std::move(r.input), scaled(std::move(r.weights), fault), std::move(r.bias)};
  };
  return c;
}

GradCase maxpool_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("maxpool2x2", seed);
  Tensor<double> x({2, 2, 6, 6});
  // Each window's winner leads the runner-up by at least 0.1.
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t wy = 0; wy < 3; ++wy) {
      for (std::size_t wx = 0; wx < 3; ++wx) {
        double v[4];
        do {
          for (double& e : v) e = std::normal_distribution<double>(0.0, 1.0)(rng);
          std::sort(v, v + 4);
        } while (v[3] - v[2] < 0.1);
        std::shuffle(v, v + 4, rng);
        for (std::size_t k = 0; k < 4; ++k) x[p * 36 + (2 * wy + k / 2) * 6 + 2 * wx + k % 2] = v[k];
      }
    }
  }
  GradCase c{"maxpool2x2", seed, {std::move(x)}, {}, {}, {}};
  c.forward = [](const TensorList& in) { return ops::maxpool2x2_forward(in[0]).output; };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    const auto pooled = ops::maxpool2x2_forward(in[0]);
    return TensorList{scaled(ops::maxpool2x2_backward(g, pooled.argmax, in[0].dims()), fault)};
  };
  return c;
}

GradCase relu_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("relu", seed);
  Tensor<double> x = normal(rng, {2, 3, 4, 4});
  for (double& v : x.data())
    while (std::abs(v) < 0.1) v = std::normal_distribution<double>(0.0, 1.0)(rng);
  GradCase c{"relu", seed, {std::move(x)}, {}, {}, {}};
  c.forward = [](const TensorList& in) { return ops::relu_forward(in[0]); };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    return TensorList{scaled(ops::relu_backward(g, in[0]), fault)};
  };
  return c;
}

GradCase sigmoid_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("sigmoid", seed);
  GradCase c{"sigmoid", seed, {normal(rng, {2, 3, 4, 4})}, {}, {}, {}};
  c.forward = [](const TensorList& in) { return ops::sigmoid_forward(in[0]); };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    return TensorList{scaled(ops::sigmoid_backward(g, ops::sigmoid_forward(in[0])), fault)};
  };
  return c;
}

GradCase concat_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("concat_channels", seed);
  GradCase c{"concat_channels", seed, {normal(rng, {2, 2, 3, 3}), normal(rng, {2, 3, 3, 3})}, {}, {}, {}};
  c.forward = [](const TensorList& in) { return ops::concat_channels(in[0], in[1]); };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    auto [a, b] = ops::split_channels(g, in[0].dim(1));
    return TensorList{scaled(std::move(a), fault), std::move(b)};
  };
  return c;
}

GradCase softmax_ce_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("softmax_ce", seed);
  Tensor<double> labels({2, 3, 3});
  for (double& v : labels.data()) v = rng() % 7 == 0 ? ops::kIgnoreId : static_cast<double>(rng() % 3);
  GradCase c{"softmax_ce", seed, {normal(rng, {2, 3, 3, 3}), std::move(labels)}, {false, true}, {}, {}};
  c.forward = [](const TensorList& in) {
    return Tensor<double>({1}, {ops::softmax_ce_forward(in[0], to_labels(in[1]))});
  };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    auto r = ops::softmax_ce(in[0], to_labels(in[1]));
    return TensorList{scaled(std::move(r.grad_logits), g[0] * fault), {}};
  };
  return c;
}

GradCase bilinear_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("bilinear_sample", seed);
  Tensor<double> point({2}, {off_integer(rng, -1.0, 4.0), off_integer(rng, -1.0, 5.0)});
  GradCase c{"bilinear_sample", seed, {normal(rng, {2, 4, 5}), std::move(point)}, {}, {}, {}};
  c.forward = [](const TensorList& in) {
    auto v = deform::bilinear_sample(in[0], {in[1][0], in[1][1]});
    const std::size_t channels = v.size();
    return Tensor<double>({channels}, std::move(v));
  };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    auto r = deform::bilinear_sample_backward<double>(g.data(), in[0], {in[1][0], in[1][1]});
    return TensorList{std::move(r.grad_map), Tensor<double>({2}, {r.grad_row * fault, r.grad_col * fault})};
  };
  return c;
}

GradCase deform_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("deform_conv2d", seed);
  const auto spec = ops::ConvSpec::square(2, 3, 3, 1, 1);
  Tensor<double> offsets({1, 18, 5, 5});
  for (double& v : offsets.data()) v = off_integer(rng, -2.0, 2.0);
  GradCase c{"deform_conv2d",
             seed,
             {normal(rng, {1, 2, 5, 5}), normal(rng, {3, 2, 3, 3}), normal(rng, {3}), std::move(offsets)},
             {},
             {},
             {}};
  c.forward = [spec](const TensorList& in) { return deform::deform_conv2d_forward(in[0], in[1], in[2], in[3], spec); };
  c.backward = [spec, fault](const TensorList& in, const Tensor<double>& g) {
    auto r = deform::deform_conv2d_backward(g, in[0], in[1], in[3], spec);
    return TensorList{std::move(r.input), scaled(std::move(r.weights), fault), std::move(r.bias),
                      std::move(r.offsets)};
  };
  return c;
}

GradCase focal_case(std::uint64_t seed, double fault) {
  auto rng = case_rng("focal_point_loss", seed);
  Tensor<double> pred({2, 3, 4, 4}), target({2, 3, 4, 4});
  for (double& v : pred.data()) v = uniform(rng, 0.05, 0.95);
  for (double& v : target.data()) v = rng() % 3 == 0 ? 0.0 : uniform(rng, 0.0, 0.95);
  for (int k = 0; k < 3; ++k) target[rng() % target.size()] = 1.0;
  GradCase c{"focal_point_loss", seed, {std::move(pred), std::move(target)}, {false, true}, {}, {}};
  c.forward = [](const TensorList& in) { return Tensor<double>({1}, {loss::focal_point_loss(in[0], in[1]).loss}); };
  c.backward = [fault](const TensorList& in, const Tensor<double>& g) {
    return TensorList{scaled(loss::focal_point_loss(in[0], in[1]).grad, g[0] * fault), {}};
  };
  return c;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

CheckResult check_case(const GradCase& c, const CheckOptions& options) {
  auto rng = case_rng(c.op + "/directions", c.seed);
  const Tensor<double> out = c.forward(c.inputs);
  const Tensor<double> cotangent = normal(rng, out.dims());
  const TensorList grads = c.backward(c.inputs, cotangent);
  require(grads.size() == c.inputs.size(), ErrorKind::kInternal, c.op + ": backward returned wrong arity");

  CheckResult result{c.op, c.seed, 0.0, "", true};
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    if (i < c.frozen.size() && c.frozen[i]) continue;
    require_dims(grads[i].dims(), c.inputs[i].dims(), "gradient");
    for (std::size_t d = 0; d < options.directions; ++d) {
      const Tensor<double> v = normal(rng, c.inputs[i].dims());
      TensorList plus = c.inputs, minus = c.inputs;
      for (std::size_t k = 0; k < v.size(); ++k) {
        plus[i][k] += options.step * v[k];
        minus[i][k] -= options.step * v[k];
      }
      const double numeric = (dot(cotangent, c.forward(plus)) - dot(cotangent, c.forward(minus))) / (2 * options.step);
      const double err = relative_error(dot(grads[i], v), numeric, options.floor);
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = "input" + std::to_string(i);
      }
    }
  }
  result.passed = result.max_rel_error <= options.tolerance;
  return result;
}

const std::vector<std::string>& suite_ops() {
  static const std::vector<std::string> ops{"conv2d",     "transposed_conv2x2", "maxpool2x2",      "relu",
                                            "sigmoid",    "concat_channels",    "softmax_ce",      "bilinear_sample",
                                            "deform_conv2d", "focal_point_loss"};
  return ops;
}

GradCase make_case(const std::string& op, std::uint64_t seed, double fault_scale) {
  if (op == "conv2d") return conv2d_case(seed, fault_scale);
  if (op == "transposed_conv2x2") return transposed_case(seed, fault_scale);
  if (op == "maxpool2x2") return maxpool_case(seed, fault_scale);
  if (op == "relu") return relu_case(seed, fault_scale);
  if (op == "sigmoid") return sigmoid_case(seed, fault_scale);
  if (op == "concat_channels") return concat_case(seed, fault_scale);
  if (op == "softmax_ce") return softmax_ce_case(seed, fault_scale);
  if (op == "bilinear_sample") return bilinear_case(seed, fault_scale);
  if (op == "deform_conv2d") return deform_case(seed, fault_scale);
  if (op == "focal_point_loss") return focal_case(seed, fault_scale);
  fail(ErrorKind::kConfig, "unknown gradcheck op " + op);
}

namespace {

// One randomized end-to-end attempt; returns nullopt when some input has no
// kink-free direction, i.e. the drawn point sits on a non-differentiable set.
std::optional<CheckResult> end_to_end_attempt(std::mt19937_64& rng, std::uint64_t seed, const CheckOptions& options,
                                              double fault_scale) {
  net::NetworkConfig cfg;
  cfg.base_channels = 2;
  auto model = net::build_dhsnet<double>(cfg, seed);
  for (auto& p : model.params()) {
    const bool offset = p.name.find(".offset.") != std::string::npos;
    const bool bias = p.name.ends_with(".bias");
    if (offset) p.value = normal(rng, p.value.dims(), bias ? 0.3 : 0.5 / std::sqrt(double(p.value.size() / p.value.dim(0))));
    else if (bias) p.value = normal(rng, p.value.dims(), 0.1);
  }

  const std::size_t n = 2, side = cfg.spatial_multiple();
  const Tensor<double> images = normal(rng, {n, cfg.in_channels, side, side});
  ops::LabelMap labels({n, side, side});
  for (auto& v : labels.data()) v = rng() % 9 == 0 ? ops::kIgnoreId : static_cast<std::int32_t>(rng() % cfg.seg_classes);
  const std::size_t grid = side / cfg.heatmap_stride;
  Tensor<double> target({n, cfg.heat_classes, grid, grid});
  for (double& v : target.data()) v = rng() % 2 == 0 ? 0.0 : uniform(rng, 0.0, 0.95);
  for (int k = 0; k < 4; ++k) target[rng() % target.size()] = 1.0;

  auto loss_at = [&](const net::Model<double>& m, const Tensor<double>& x) {
    auto out = m.forward(x);
    return static_cast<double>(loss::combined_loss(out.seg_logits, labels, &*out.heat_pred, &target, 1.0).total);
  };

  net::Tape<double> tape;
  model.zero_grad();
  auto out = model.forward(images, &tape);
  auto l = loss::combined_loss(out.seg_logits, labels, &*out.heat_pred, &target, 1.0);
  const Tensor<double> grad_images = model.backward(tape, l.grad_seg, &l.grad_heat);
  if (fault_scale != 1.0) {
    auto& g = model.param("enc2.conv1.weight").grad;
    g = scaled(std::move(g), fault_scale);
  }

  CheckResult result{"end_to_end_dhsnet", seed, 0.0, "", true};
  // A random perturbation of size h crosses a ReLU, max-pool or bilinear
  // kink somewhere in the network often enough to swamp the comparison. A
  // direction counts only when the right and left derivatives, each
  // Richardson-extrapolated from one-sided steps h and 2h, agree; any kink
  // within [-2h, 2h] separates them. Otherwise the direction is redrawn.
  // Unit-norm directions keep the per-element displacement small.
  constexpr int kMaxDraws = 12;
  auto probe = model;
  Tensor<double> probe_images = images;
  auto check_slot = [&](Tensor<double>& slot, const Tensor<double>& base, const Tensor<double>& grad,
                        const std::string& what) {
    for (std::size_t d = 0; d < options.directions; ++d) {
      bool smooth = false;
      for (int draw = 0; draw < kMaxDraws && !smooth; ++draw) {
        Tensor<double> v = normal(rng, base.dims());
        v = scaled(std::move(v), 1.0 / std::sqrt(dot(v, v)));
        auto loss_along = [&](double t) {
          for (std::size_t k = 0; k < v.size(); ++k) slot[k] = base[k] + t * v[k];
          return loss_at(probe, probe_images);
        };
        const double h = options.step;
        const double l0 = loss_along(0.0), lp = loss_along(h), lm = loss_along(-h);
        const double lpp = loss_along(2 * h), lmm = loss_along(-2 * h);
        slot = base;
        const double right = (4 * lp - 3 * l0 - lpp) / (2 * h);
        const double left = (3 * l0 - 4 * lm + lmm) / (2 * h);
        if (relative_error(right, left, options.floor) > 0.1 * options.tolerance) continue;
        const double d1 = (lp - lm) / (2 * h);
        smooth = true;
        const double err = relative_error(dot(grad, v), d1, options.floor);
        if (err > result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_input = what;
        }
      }
      if (!smooth) return false;
    }
    return true;
  };
  if (!check_slot(probe_images, images, grad_images, "image")) return std::nullopt;
  for (std::size_t i = 0; i < model.params().size(); ++i)
    if (!check_slot(probe.params()[i].value, model.params()[i].value, model.params()[i].grad, model.params()[i].name))
      return std::nullopt;
  result.passed = result.max_rel_error <= options.tolerance;
  return result;
}

}  // namespace

CheckResult check_end_to_end(std::uint64_t seed, const CheckOptions& options, double fault_scale) {
  constexpr int kMaxAttempts = 4;
  auto rng = case_rng("end_to_end", seed);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt)
    if (auto r = end_to_end_attempt(rng, seed, options, fault_scale)) return *r;
  return {"end_to_end_dhsnet", seed, std::numeric_limits<double>::infinity(), "no differentiable sample point", false};
}

bool SuiteReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::string SuiteReport::format() const {
  std::ostringstream os;
  std::size_t ok = 0;
  for (const auto& r : results) {
    os << fmt::format("{} {} seed={} max_rel_err={:.3e} worst={}\n", r.passed ? "PASS" : "FAIL", r.op, r.seed,
                      r.max_rel_error, r.worst_input);
    ok += r.passed ? 1 : 0;
  }
  os << fmt::format("gradcheck {}/{} passed\n", ok, results.size());
  return os.str();
}

SuiteReport run_suite(const SuiteOptions& options) {
  SuiteReport report;
  CheckOptions op_opts;
  op_opts.tolerance = options.op_tolerance;
  for (const auto& op : suite_ops()) {
    const double fault = op == options.fault_op ? options.fault_scale : 1.0;
    for (std::size_t s = 0; s < options.seeds; ++s)
      report.results.push_back(check_case(make_case(op, options.first_seed + s, fault), op_opts));
  }
  CheckOptions e2e_opts;
  e2e_opts.tolerance = options.end_to_end_tolerance;
  const double fault = options.fault_op == "end_to_end_dhsnet" ? options.fault_scale : 1.0;
  for (std::size_t s = 0; s < options.end_to_end_seeds; ++s)
    report.results.push_back(check_end_to_end(options.first_seed + s, e2e_opts, fault));
  return report;
}

}  // namespace dhs::grad
