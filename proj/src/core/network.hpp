// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// U-shape segmentation networks: the plain four-level UNet baseline and
// DHSNet, which swaps selected 3x3 convolutions for deformable ones and adds
// a Gaussian-heatmap proposal head on its own residual branch.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deform.hpp"
#include "losses.hpp"
#include "ops.hpp"
#include "tensor.hpp"

namespace dhs::net {

enum class ModelKind { kUnet, kDhsnet };

const char* kind_name(ModelKind kind);
ModelKind parse_kind(std::string_view name);

struct NetworkConfig {
  static constexpr std::size_t kLevels = 4;

  std::size_t in_channels = 3;
  std::size_t base_channels = 16;
  std::size_t seg_classes = 4;
  std::size_t heat_classes = 3;
  std::size_t heatmap_stride = 4;
  std::set<std::size_t> deformable_levels = {2, 3, 4};
  // Place the deformable levels on decoder blocks instead of encoder blocks.
  bool deformable_decoder = false;
  std::size_t heat_head_depth = 2;

  void validate() const;
  std::size_t width(std::size_t level) const { return base_channels << (level - 1); }
  // Spatial extents must be multiples of this.
  std::size_t spatial_multiple() const;

  // key = value lines, stable key order.
  std::string to_text() const;
  // Applies one key; returns false for unknown keys.
  bool set(std::string_view key, std::string_view value);
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

std::set<std::size_t> parse_level_set(std::string_view text);
std::string format_level_set(const std::set<std::size_t>& levels);

/// One 3x3 (or 1x1) convolution site, optionally deformable, optionally
/// followed by ReLU. Indices point into the model's parameter list.
struct ConvUnit {
  ops::ConvSpec spec;
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::optional<std::size_t> offset_weight;
  std::optional<std::size_t> offset_bias;
  bool relu = true;

  bool deformable() const { return offset_weight.has_value(); }
};

struct UpUnit {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct ResidualStage {
  ConvUnit entry;  // stride 2 until the heatmap stride is reached
  ConvUnit conv1;
  ConvUnit conv2;  // no ReLU; the skip sum is rectified
};

struct Layout {
  std::vector<ConvUnit> encoder;  // 2 per level
  ConvUnit bottleneck[2];
  std::vector<UpUnit> up;         // index 0 is the deepest decoder level (4)
  std::vector<ConvUnit> decoder;  // 2 per level, deepest first
  ConvUnit classifier;
  bool has_heat_head = false;
  std::vector<ResidualStage> heat_stages;
  ConvUnit heat_conv1;
  ConvUnit heat_conv2;
};

struct ParamSpec {
  std::string name;
  Shape dims;
  std::size_t fan_in = 0;  // 0 means constant-initialized with `fill`
  double fill = 0.0;
  double gain = 1.0;  // scales the Kaiming-uniform bound
};

template <typename T>
struct ConvTape {
  Tensor<T> input;
  Tensor<T> offsets;  // deformable units only
  Tensor<T> output;   // post-activation
};

template <typename T>
struct Tape {
  std::vector<ConvTape<T>> encoder;
  std::vector<std::vector<std::size_t>> pool_argmax;
  std::vector<Shape> pool_dims;
  ConvTape<T> bottleneck[2];
  std::vector<Tensor<T>> up_input;
  std::vector<std::size_t> skip_channels;
  std::vector<ConvTape<T>> decoder;
  ConvTape<T> classifier;
  std::vector<ConvTape<T>> heat_entry;
  std::vector<ConvTape<T>> heat_conv1;
  std::vector<ConvTape<T>> heat_conv2;
  std::vector<Tensor<T>> heat_stage_out;
  ConvTape<T> heat_conv1_final;
  ConvTape<T> heat_conv2_final;
  Tensor<T> heat_out;
  std::uint32_t zeroed_skips = 0;
};

template <typename T>
struct ForwardResult {
  Tensor<T> seg_logits;               // [N, C, H, W]
  std::optional<Tensor<T>> heat_pred;  // [N, C_h, H/R, W/R], DHSNet only
};

struct ForwardOptions {
  // Bit l-1 zeroes the level-l encoder feature before it is concatenated.
  std::uint32_t zeroed_skips = 0;
};

template <typename T>
class Model {
 public:
  Model() = default;
  Model(ModelKind kind, NetworkConfig config, std::uint64_t seed);

  ModelKind kind() const { return kind_; }
  const NetworkConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const Layout& layout() const { return layout_; }

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }
  Parameter<T>& param(std::string_view name);
  const Parameter<T>& param(std::string_view name) const;
  bool has_param(std::string_view name) const;
  std::size_t parameter_count() const;

  // Replaces every parameter value; names and dims must match the layout.
  void assign(std::vector<Parameter<T>> params);
  void zero_grad();

  ForwardResult<T> forward(const Tensor<T>& images, Tape<T>* tape = nullptr, const ForwardOptions& options = {}) const;
  // Accumulates parameter gradients; returns d loss / d images.
  Tensor<T> backward(const Tape<T>& tape, const Tensor<T>& grad_seg, const Tensor<T>* grad_heat);

  template <typename U>
  Model<U> cast() const;

 private:
  ModelKind kind_ = ModelKind::kUnet;
  NetworkConfig config_;
  std::uint64_t seed_ = 0;
  Layout layout_;
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;

  template <typename U>
  friend class Model;
};

/// Initial bias of the final heatmap convolution: logit of a 0.1 prior.
inline constexpr double kHeatBiasInit = -2.1972245773362196;
/// Kaiming bound multiplier for the final heatmap convolution weights.
inline constexpr double kHeatOutputGain = 0.01;

/// Parameter names, dims and initialization fan-in for a model, in order.
std::vector<ParamSpec> parameter_specs(ModelKind kind, const NetworkConfig& config);

template <typename T>
Model<T> build_unet(const NetworkConfig& config, std::uint64_t seed);
template <typename T>
Model<T> build_dhsnet(const NetworkConfig& config, std::uint64_t seed);
template <typename T>
Model<T> build_model(ModelKind kind, const NetworkConfig& config, std::uint64_t seed);

/// Image-only heatmap branch; image dims must divide by the heatmap stride.
template <typename T>
Tensor<T> heatmap_head_forward(const Model<T>& model, const Tensor<T>& images);

struct SgdConfig {
  double lr = 0.05;
  double momentum = 0.9;
  // Each branch's gradient is rescaled to an L2 norm of at most this; 0 disables.
  double max_grad_norm = 0.25;
};

/// The heatmap head reads the raw image and shares no parameters with the
/// segmentation network, so the optimizer clips the two branches separately.
inline bool in_heat_branch(std::string_view name) { return name.starts_with("heat."); }

template <typename T>
class Sgd {
 public:
  Sgd(const Model<T>& model, SgdConfig config);
  // g <- g * min(1, max_grad_norm / |g_branch|); v <- momentum * v + g; value <- value - lr * v
  // Returns the norm of the whole gradient before clipping.
  double step(Model<T>& model);
  const SgdConfig& config() const { return config_; }

 private:
  SgdConfig config_;
  std::vector<Tensor<T>> velocity_;
  std::vector<std::uint8_t> branch_;  // 1 for heat-branch parameters
};

template <typename T>
struct Batch {
  Tensor<T> images;          // [N, in, H, W]
  ops::LabelMap labels;      // [N, H, W]
  Tensor<T> heat_target;     // [N, C_h, H/R, W/R]
};

struct TrainConfig {
  SgdConfig sgd;
  double lambda_point = 1.0;
  loss::FocalParams focal;
};

struct StepLoss {
  double seg = 0;
  double point = 0;
  double total = 0;
};

/// Forward, combined loss, backward, SGD update. A non-finite loss throws a
/// numeric error before any parameter changes.
template <typename T>
StepLoss train_step(Model<T>& model, const Batch<T>& batch, Sgd<T>& optimizer, const TrainConfig& config);

inline constexpr char kCheckpointMagic[4] = {'D', 'H', 'S', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

/// Reads a checkpoint; with expected_kind set, a model of another kind is
/// rejected with a config error. Payloads of the other precision are cast.
template <typename T>
Model<T> load_checkpoint(const std::string& path, std::optional<ModelKind> expected_kind = std::nullopt);

}  // namespace dhs::net
