// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "network.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "text.hpp"

namespace dhs::net {

const char* kind_name(ModelKind kind) { return kind == ModelKind::kUnet ? "unet" : "dhsnet"; }

ModelKind parse_kind(std::string_view name) {
  if (name == "unet") return ModelKind::kUnet;
  if (name == "dhsnet") return ModelKind::kDhsnet;
  fail(ErrorKind::kConfig, "unknown model kind '" + std::string(name) + "' (expected unet or dhsnet)");
}

std::set<std::size_t> parse_level_set(std::string_view text) {
  std::set<std::size_t> levels;
  for (const auto& item : text::split(text, ',')) {
    const auto token = text::trim(item);
    if (token.empty() || token == "none") continue;
    levels.insert(text::parse_uint(token, "deformable level"));
  }
  return levels;
}

std::string format_level_set(const std::set<std::size_t>& levels) {
  if (levels.empty()) return "none";
  std::string out;
  for (std::size_t l : levels) {
    if (!out.empty()) out += ",";
    out += std::to_string(l);
  }
  return out;
}

void NetworkConfig::validate() const {
  require(in_channels >= 1, ErrorKind::kConfig, "in_channels must be >= 1");
  require(base_channels >= 1, ErrorKind::kConfig, "base_channels must be >= 1");
  require(seg_classes >= 2, ErrorKind::kConfig, "seg_classes must be >= 2");
  require(heat_classes >= 1, ErrorKind::kConfig, "heat_classes must be >= 1");
  require(heatmap_stride >= 1 && std::has_single_bit(heatmap_stride), ErrorKind::kConfig,
          "heatmap_stride must be a power of two");
  require(heat_head_depth >= 1, ErrorKind::kConfig, "heat_head_depth must be >= 1");
  require(static_cast<std::size_t>(std::countr_zero(heatmap_stride)) <= heat_head_depth, ErrorKind::kConfig,
          "heat_head_depth too small to reach the heatmap stride");
  for (std::size_t l : deformable_levels)
    require(l >= 1 && l <= kLevels, ErrorKind::kConfig, "deformable levels must lie in {1,2,3,4}");
}

std::size_t NetworkConfig::spatial_multiple() const {
  return std::max<std::size_t>(std::size_t{1} << kLevels, heatmap_stride);
}

std::string NetworkConfig::to_text() const {
  std::ostringstream os;
  os << "in_channels = " << in_channels << "\n"
     << "base_channels = " << base_channels << "\n"
     << "seg_classes = " << seg_classes << "\n"
     << "heat_classes = " << heat_classes << "\n"
     << "heatmap_stride = " << heatmap_stride << "\n"
     << "deformable_levels = " << format_level_set(deformable_levels) << "\n"
     << "deformable_decoder = " << (deformable_decoder ? "true" : "false") << "\n"
     << "heat_head_depth = " << heat_head_depth << "\n";
  return os.str();
}

bool NetworkConfig::set(std::string_view key, std::string_view value) {
  if (key == "in_channels") in_channels = text::parse_uint(value, key);
  else if (key == "base_channels") base_channels = text::parse_uint(value, key);
  else if (key == "seg_classes") seg_classes = text::parse_uint(value, key);
  else if (key == "heat_classes") heat_classes = text::parse_uint(value, key);
  else if (key == "heatmap_stride") heatmap_stride = text::parse_uint(value, key);
  else if (key == "deformable_levels") deformable_levels = parse_level_set(value);
  else if (key == "deformable_decoder") deformable_decoder = text::parse_bool(value, key);
  else if (key == "heat_head_depth") heat_head_depth = text::parse_uint(value, key);
  else return false;
  return true;
}

namespace {

class LayoutBuilder {
 public:
  std::vector<ParamSpec> specs;

  ConvUnit conv(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride,
                bool relu, bool deformable) {
    ConvUnit u;
    u.spec = ops::ConvSpec::square(cin, cout, kernel, stride, kernel / 2);
    u.weight = add(name + ".weight", u.spec.weight_dims(), cin * kernel * kernel);
    u.bias = add(name + ".bias", {cout}, 0);
    u.relu = relu;
    if (deformable) {
      const auto os = deform::offset_spec(u.spec);
      u.offset_weight = add(name + ".offset.weight", os.weight_dims(), 0);
      u.offset_bias = add(name + ".offset.bias", {os.out_channels}, 0);
    }
    return u;
  }

  UpUnit up(const std::string& name, std::size_t cin, std::size_t cout) {
    UpUnit u;
    u.weight = add(name + ".weight", {cin, cout, 2, 2}, cin);
    u.bias = add(name + ".bias", {cout}, 0);
    return u;
  }

 private:
  std::size_t add(std::string name, Shape dims, std::size_t fan_in) {
    specs.push_back({std::move(name), std::move(dims), fan_in, 0.0, 1.0});
    return specs.size() - 1;
  }
};

std::pair<Layout, std::vector<ParamSpec>> make_layout(ModelKind kind, const NetworkConfig& cfg) {
  cfg.validate();
  LayoutBuilder b;
  Layout layout;
  const bool dhs = kind == ModelKind::kDhsnet;
  auto deformable_at = [&](std::size_t level, bool decoder) {
    return dhs && decoder == cfg.deformable_decoder && cfg.deformable_levels.count(level) > 0;
  };

  for (std::size_t l = 1; l <= NetworkConfig::kLevels; ++l) {
    const std::size_t cin = l == 1 ? cfg.in_channels : cfg.width(l - 1);
    const std::string name = "enc" + std::to_string(l);
    layout.encoder.push_back(b.conv(name + ".conv1", cin, cfg.width(l), 3, 1, true, deformable_at(l, false)));
    layout.encoder.push_back(b.conv(name + ".conv2", cfg.width(l), cfg.width(l), 3, 1, true, deformable_at(l, false)));
  }
  const std::size_t deepest = cfg.width(NetworkConfig::kLevels);
  layout.bottleneck[0] = b.conv("mid.conv1", deepest, 2 * deepest, 3, 1, true, false);
  layout.bottleneck[1] = b.conv("mid.conv2", 2 * deepest, 2 * deepest, 3, 1, true, false);
  for (std::size_t l = NetworkConfig::kLevels; l >= 1; --l) {
    const std::size_t cin = l == NetworkConfig::kLevels ? 2 * deepest : cfg.width(l + 1);
    const std::string name = "dec" + std::to_string(l);
    layout.up.push_back(b.up(name + ".up", cin, cfg.width(l)));
    layout.decoder.push_back(b.conv(name + ".conv1", 2 * cfg.width(l), cfg.width(l), 3, 1, true, deformable_at(l, true)));
    layout.decoder.push_back(b.conv(name + ".conv2", cfg.width(l), cfg.width(l), 3, 1, true, deformable_at(l, true)));
  }
  layout.classifier = b.conv("seg.conv", cfg.width(1), cfg.seg_classes, 1, 1, false, false);

  if (dhs) {
    layout.has_heat_head = true;
    std::size_t stride = 1, cin = cfg.in_channels, width = cfg.base_channels;
    for (std::size_t s = 1; s <= cfg.heat_head_depth; ++s) {
      const std::string name = "heat.stage" + std::to_string(s);
      const std::size_t step = stride < cfg.heatmap_stride ? 2 : 1;
      ResidualStage stage;
      stage.entry = b.conv(name + ".entry", cin, width, 3, step, true, false);
      stage.conv1 = b.conv(name + ".conv1", width, width, 3, 1, true, false);
      stage.conv2 = b.conv(name + ".conv2", width, width, 3, 1, false, false);
      layout.heat_stages.push_back(stage);
      stride *= step;
      cin = width;
      if (s < 3) width *= 2;
    }
    layout.heat_conv1 = b.conv("heat.conv1", cin, cin, 3, 1, true, false);
    layout.heat_conv2 = b.conv("heat.conv2", cin, cfg.heat_classes, 3, 1, false, false);
    // Every cell starts near the 0.1 prior. Full-scale random weights here
    // give logits of several units, and the first update then drives the
    // whole map into the saturated clamp; a small nonzero gain still lets
    // gradient reach the stages below from the first step.
    b.specs[layout.heat_conv2.weight].gain = kHeatOutputGain;
    b.specs[layout.heat_conv2.bias].fill = kHeatBiasInit;
  }
  return {std::move(layout), std::move(b.specs)};
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
Tensor<T> init_tensor(const ParamSpec& spec, std::uint64_t seed) {
  Tensor<T> t(spec.dims, static_cast<T>(spec.fill));
  if (spec.fan_in == 0) return t;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fnv1a(spec.name)), static_cast<std::uint32_t>(fnv1a(spec.name) >> 32)};
  std::mt19937_64 rng(seq);
  const double bound = spec.gain * std::sqrt(6.0 / static_cast<double>(spec.fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
void accumulate(Parameter<T>& p, const Tensor<T>& g) {
  ops::add_inplace(p.grad, g);
}

template <typename T>
Tensor<T> run_unit(const ConvUnit& u, const std::vector<Parameter<T>>& params, const Tensor<T>& x,
                   ConvTape<T>* tape) {
  Tensor<T> y;
  if (u.deformable()) {
    Tensor<T> offsets = deform::offset_predictor_forward(x, params[*u.offset_weight].value,
                                                         params[*u.offset_bias].value, u.spec);
    y = deform::deform_conv2d_forward(x, params[u.weight].value, params[u.bias].value, offsets, u.spec);
    if (tape) tape->offsets = std::move(offsets);
  } else {
    y = ops::conv2d_forward(x, params[u.weight].value, params[u.bias].value, u.spec);
  }
  if (u.relu) ops::relu_inplace(y);
  if (tape) {
    tape->input = x;
    tape->output = y;
  }
  return y;
}

template <typename T>
Tensor<T> back_unit(const ConvUnit& u, std::vector<Parameter<T>>& params, const ConvTape<T>& tape,
                    const Tensor<T>& grad_out) {
  // A ReLU output is positive exactly where its input was.
  const Tensor<T> g = u.relu ? ops::relu_backward(grad_out, tape.output) : grad_out;
  if (u.deformable()) {
    auto dg = deform::deform_conv2d_backward(g, tape.input, params[u.weight].value, tape.offsets, u.spec);
    accumulate(params[u.weight], dg.weights);
    accumulate(params[u.bias], dg.bias);
    auto og = ops::conv2d_backward(dg.offsets, tape.input, params[*u.offset_weight].value, deform::offset_spec(u.spec));
    accumulate(params[*u.offset_weight], og.weights);
    accumulate(params[*u.offset_bias], og.bias);
    ops::add_inplace(dg.input, og.input);
    return std::move(dg.input);
  }
  auto cg = ops::conv2d_backward(g, tape.input, params[u.weight].value, u.spec);
  accumulate(params[u.weight], cg.weights);
  accumulate(params[u.bias], cg.bias);
  return std::move(cg.input);
}

template <typename T>
Tensor<T> run_heat_head(const Layout& layout, const std::vector<Parameter<T>>& params, const Tensor<T>& images,
                        Tape<T>* tape) {
  Tensor<T> h = images;
  for (std::size_t s = 0; s < layout.heat_stages.size(); ++s) {
    const auto& stage = layout.heat_stages[s];
    h = run_unit(stage.entry, params, h, tape ? &tape->heat_entry[s] : nullptr);
    Tensor<T> r = run_unit(stage.conv1, params, h, tape ? &tape->heat_conv1[s] : nullptr);
    r = run_unit(stage.conv2, params, r, tape ? &tape->heat_conv2[s] : nullptr);
    ops::add_inplace(r, h);
    ops::relu_inplace(r);
    if (tape) tape->heat_stage_out[s] = r;
    h = std::move(r);
  }
  h = run_unit(layout.heat_conv1, params, h, tape ? &tape->heat_conv1_final : nullptr);
  h = run_unit(layout.heat_conv2, params, h, tape ? &tape->heat_conv2_final : nullptr);
  Tensor<T> out = ops::sigmoid_forward(h);
  if (tape) tape->heat_out = out;
  return out;
}

void check_images(const NetworkConfig& cfg, const Shape& dims) {
  require_rank(dims, 4, "network input");
  require(dims[1] == cfg.in_channels, ErrorKind::kShape,
          "network input has " + std::to_string(dims[1]) + " channels, model expects " +
              std::to_string(cfg.in_channels));
  const std::size_t m = cfg.spatial_multiple();
  require(dims[2] % m == 0 && dims[3] % m == 0 && dims[2] > 0 && dims[3] > 0, ErrorKind::kShape,
          "network input extents " + shape_str(dims) + " must be multiples of " + std::to_string(m));
}

}  // namespace

std::vector<ParamSpec> parameter_specs(ModelKind kind, const NetworkConfig& config) {
  return make_layout(kind, config).second;
}

template <typename T>
Model<T>::Model(ModelKind kind, NetworkConfig config, std::uint64_t seed)
    : kind_(kind), config_(std::move(config)), seed_(seed) {
  auto [layout, specs] = make_layout(kind_, config_);
  layout_ = std::move(layout);
  params_.reserve(specs.size());
  for (const auto& spec : specs) {
    require(index_.emplace(spec.name, params_.size()).second, ErrorKind::kInternal,
            "duplicate parameter name " + spec.name);
    params_.emplace_back(spec.name, init_tensor<T>(spec, seed_));
  }
}

template <typename T>
Parameter<T>& Model<T>::param(std::string_view name) {
  auto it = index_.find(std::string(name));
  require(it != index_.end(), ErrorKind::kConfig, "no parameter named " + std::string(name));
  return params_[it->second];
}

template <typename T>
const Parameter<T>& Model<T>::param(std::string_view name) const {
  return const_cast<Model*>(this)->param(name);
}

template <typename T>
bool Model<T>::has_param(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void Model<T>::assign(std::vector<Parameter<T>> params) {
  require(params.size() == params_.size(), ErrorKind::kFormat,
          "expected " + std::to_string(params_.size()) + " tensors, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].name == params_[i].name, ErrorKind::kFormat,
            "tensor " + std::to_string(i) + " is '" + params[i].name + "', expected '" + params_[i].name + "'");
    require(params[i].value.dims() == params_[i].value.dims(), ErrorKind::kFormat,
            "tensor '" + params[i].name + "' has dims " + shape_str(params[i].value.dims()) + ", expected " +
                shape_str(params_[i].value.dims()));
    params_[i].value = std::move(params[i].value);
    params_[i].grad = Tensor<T>(params_[i].value.dims());
  }
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& images, Tape<T>* tape, const ForwardOptions& options) const {
  check_images(config_, images.dims());
  constexpr std::size_t levels = NetworkConfig::kLevels;
  if (tape) {
    *tape = Tape<T>{};
    tape->encoder.resize(2 * levels);
    tape->pool_argmax.resize(levels);
    tape->pool_dims.resize(levels);
    tape->up_input.resize(levels);
    tape->skip_channels.resize(levels);
    tape->decoder.resize(2 * levels);
    tape->heat_entry.resize(layout_.heat_stages.size());
    tape->heat_conv1.resize(layout_.heat_stages.size());
    tape->heat_conv2.resize(layout_.heat_stages.size());
    tape->heat_stage_out.resize(layout_.heat_stages.size());
    tape->zeroed_skips = options.zeroed_skips;
  }

  std::vector<Tensor<T>> skips(levels);
  Tensor<T> x = images;
  for (std::size_t l = 0; l < levels; ++l) {
    x = run_unit(layout_.encoder[2 * l], params_, x, tape ? &tape->encoder[2 * l] : nullptr);
    x = run_unit(layout_.encoder[2 * l + 1], params_, x, tape ? &tape->encoder[2 * l + 1] : nullptr);
    auto pooled = ops::maxpool2x2_forward(x);
    if (tape) {
      tape->pool_argmax[l] = std::move(pooled.argmax);
      tape->pool_dims[l] = x.dims();
    }
    skips[l] = std::move(x);
    if (options.zeroed_skips & (1u << l)) skips[l].fill(T(0));
    x = std::move(pooled.output);
  }
  x = run_unit(layout_.bottleneck[0], params_, x, tape ? &tape->bottleneck[0] : nullptr);
  x = run_unit(layout_.bottleneck[1], params_, x, tape ? &tape->bottleneck[1] : nullptr);
  for (std::size_t d = 0; d < levels; ++d) {
    const std::size_t level = levels - 1 - d;
    const auto& up = layout_.up[d];
    Tensor<T> upsampled = ops::transposed_conv2x2_forward(x, params_[up.weight].value, params_[up.bias].value);
    if (tape) {
      tape->up_input[d] = std::move(x);
      tape->skip_channels[d] = skips[level].dim(1);
    }
    x = ops::concat_channels(upsampled, skips[level]);
    x = run_unit(layout_.decoder[2 * d], params_, x, tape ? &tape->decoder[2 * d] : nullptr);
    x = run_unit(layout_.decoder[2 * d + 1], params_, x, tape ? &tape->decoder[2 * d + 1] : nullptr);
  }
  ForwardResult<T> result;
  result.seg_logits = run_unit(layout_.classifier, params_, x, tape ? &tape->classifier : nullptr);
  if (layout_.has_heat_head) result.heat_pred = run_heat_head(layout_, params_, images, tape);
  return result;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tape<T>& tape, const Tensor<T>& grad_seg, const Tensor<T>* grad_heat) {
  constexpr std::size_t levels = NetworkConfig::kLevels;
  require(tape.encoder.size() == 2 * levels, ErrorKind::kInternal, "backward called without a recorded tape");
  std::vector<Tensor<T>> skip_grads(levels);

  Tensor<T> g = back_unit(layout_.classifier, params_, tape.classifier, grad_seg);
  for (std::size_t d = levels; d-- > 0;) {
    const std::size_t level = levels - 1 - d;
    g = back_unit(layout_.decoder[2 * d + 1], params_, tape.decoder[2 * d + 1], g);
    g = back_unit(layout_.decoder[2 * d], params_, tape.decoder[2 * d], g);
    auto [g_up, g_skip] = ops::split_channels(g, g.dim(1) - tape.skip_channels[d]);
    skip_grads[level] = std::move(g_skip);
    const auto& up = layout_.up[d];
    auto ug = ops::transposed_conv2x2_backward(g_up, tape.up_input[d], params_[up.weight].value);
    accumulate(params_[up.weight], ug.weights);
    accumulate(params_[up.bias], ug.bias);
    g = std::move(ug.input);
  }
  g = back_unit(layout_.bottleneck[1], params_, tape.bottleneck[1], g);
  g = back_unit(layout_.bottleneck[0], params_, tape.bottleneck[0], g);
  for (std::size_t l = levels; l-- > 0;) {
    g = ops::maxpool2x2_backward(g, tape.pool_argmax[l], tape.pool_dims[l]);
    // A zeroed skip carried no signal forward, so none flows back.
    if (!(tape.zeroed_skips & (1u << l))) ops::add_inplace(g, skip_grads[l]);
    g = back_unit(layout_.encoder[2 * l + 1], params_, tape.encoder[2 * l + 1], g);
    g = back_unit(layout_.encoder[2 * l], params_, tape.encoder[2 * l], g);
  }

  if (layout_.has_heat_head && grad_heat != nullptr) {
    Tensor<T> h = ops::sigmoid_backward(*grad_heat, tape.heat_out);
    h = back_unit(layout_.heat_conv2, params_, tape.heat_conv2_final, h);
    h = back_unit(layout_.heat_conv1, params_, tape.heat_conv1_final, h);
    for (std::size_t s = layout_.heat_stages.size(); s-- > 0;) {
      const auto& stage = layout_.heat_stages[s];
      const Tensor<T> g_sum = ops::relu_backward(h, tape.heat_stage_out[s]);
      Tensor<T> r = back_unit(stage.conv2, params_, tape.heat_conv2[s], g_sum);
      r = back_unit(stage.conv1, params_, tape.heat_conv1[s], r);
      ops::add_inplace(r, g_sum);
      h = back_unit(stage.entry, params_, tape.heat_entry[s], r);
    }
    ops::add_inplace(g, h);
  }
  return g;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> out;
  out.kind_ = kind_;
  out.config_ = config_;
  out.seed_ = seed_;
  out.layout_ = layout_;
  out.index_ = index_;
  out.params_.reserve(params_.size());
  for (const auto& p : params_) out.params_.emplace_back(p.name, p.value.template cast<U>());
  return out;
}

template <typename T>
Model<T> build_unet(const NetworkConfig& config, std::uint64_t seed) {
  return Model<T>(ModelKind::kUnet, config, seed);
}

template <typename T>
Model<T> build_dhsnet(const NetworkConfig& config, std::uint64_t seed) {
  return Model<T>(ModelKind::kDhsnet, config, seed);
}

template <typename T>
Model<T> build_model(ModelKind kind, const NetworkConfig& config, std::uint64_t seed) {
  return Model<T>(kind, config, seed);
}

template <typename T>
Tensor<T> heatmap_head_forward(const Model<T>& model, const Tensor<T>& images) {
  require(model.layout().has_heat_head, ErrorKind::kConfig, "model has no heatmap head");
  require_rank(images.dims(), 4, "heatmap head input");
  const std::size_t r = model.config().heatmap_stride;
  require(images.dim(2) % r == 0 && images.dim(3) % r == 0, ErrorKind::kShape,
          "heatmap head input extents must be multiples of the heatmap stride");
  return run_heat_head<T>(model.layout(), model.params(), images, nullptr);
}

template <typename T>
Sgd<T>::Sgd(const Model<T>& model, SgdConfig config) : config_(config) {
  require(config.lr >= 0 && std::isfinite(config.lr), ErrorKind::kConfig, "lr must be >= 0");
  require(config.momentum >= 0 && config.momentum < 1, ErrorKind::kConfig, "momentum must lie in [0,1)");
  require(config.max_grad_norm >= 0 && std::isfinite(config.max_grad_norm), ErrorKind::kConfig,
          "max_grad_norm must be >= 0");
  for (const auto& p : model.params()) {
    velocity_.emplace_back(p.value.dims());
    branch_.push_back(in_heat_branch(p.name) ? 1 : 0);
  }
}

template <typename T>
double Sgd<T>::step(Model<T>& model) {
  auto& params = model.params();
  require(params.size() == velocity_.size(), ErrorKind::kInternal, "optimizer bound to a different model");
  double sq[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < params.size(); ++i)
    for (const T g : params[i].grad.data()) sq[branch_[i]] += static_cast<double>(g) * static_cast<double>(g);
  T scale[2];
  for (int b = 0; b < 2; ++b) {
    const double norm = std::sqrt(sq[b]);
    const bool clip = config_.max_grad_norm > 0 && norm > config_.max_grad_norm;
    scale[b] = static_cast<T>(clip ? config_.max_grad_norm / norm : 1.0);
  }
  const T lr = static_cast<T>(config_.lr), mu = static_cast<T>(config_.momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* v = velocity_[i].ptr();
    T* w = params[i].value.ptr();
    const T* g = params[i].grad.ptr();
    const T c = scale[branch_[i]];
    for (std::size_t k = 0; k < velocity_[i].size(); ++k) {
      v[k] = mu * v[k] + c * g[k];
      w[k] -= lr * v[k];
    }
  }
  return std::sqrt(sq[0] + sq[1]);
}

template <typename T>
StepLoss train_step(Model<T>& model, const Batch<T>& batch, Sgd<T>& optimizer, const TrainConfig& config) {
  model.zero_grad();
  Tape<T> tape;
  auto out = model.forward(batch.images, &tape);
  const Tensor<T>* heat = out.heat_pred ? &*out.heat_pred : nullptr;
  auto loss = loss::combined_loss(out.seg_logits, batch.labels, heat, heat ? &batch.heat_target : nullptr,
                                  config.lambda_point, config.focal);
  model.backward(tape, loss.grad_seg, heat ? &loss.grad_heat : nullptr);
  for (const auto& p : model.params())
    require(p.grad.all_finite(), ErrorKind::kNumeric, "non-finite gradient for " + p.name);
  optimizer.step(model);
  return {static_cast<double>(loss.seg), static_cast<double>(loss.point), static_cast<double>(loss.total)};
}

// Checkpoint container, all integers little-endian:
//   "DHSN" | u32 version | u64 len + config text | u64 tensor count |
//   per tensor: u32 len + name | u8 precision | u32 rank | u64 dims[rank] | payload
namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void str32(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<char>& data() const { return out_; }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}
  const char* take(std::size_t n) {
    require(n <= data_.size() - pos_, ErrorKind::kFormat, "checkpoint is truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename U>
  U le() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(sizeof(U)));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    const char* p = take(n);
    return std::string(p, n);
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_payload(Writer& w, const Tensor<T>& t) {
  for (T v : t.data()) {
    if constexpr (std::is_same_v<T, float>)
      w.le(std::bit_cast<std::uint32_t>(v));
    else
      w.le(std::bit_cast<std::uint64_t>(v));
  }
}

template <typename T>
Tensor<T> read_payload(Reader& r, Precision precision, Shape dims) {
  const std::size_t width = precision == Precision::kSingle ? 4 : 8;
  // Bounded by the bytes left in the file, so corrupt dims never allocate.
  std::size_t n = 1;
  for (std::size_t d : dims) {
    require(d == 0 || n <= r.remaining() / width / d, ErrorKind::kFormat, "checkpoint is truncated");
    n *= d;
  }
  require(n <= r.remaining() / width, ErrorKind::kFormat, "checkpoint is truncated");
  std::vector<T> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (precision == Precision::kSingle)
      values[i] = static_cast<T>(std::bit_cast<float>(r.le<std::uint32_t>()));
    else
      values[i] = static_cast<T>(std::bit_cast<double>(r.le<std::uint64_t>()));
  }
  return Tensor<T>(std::move(dims), std::move(values));
}

}  // namespace

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.le<std::uint32_t>(kCheckpointVersion);
  const std::string config = std::string("kind = ") + kind_name(model.kind()) + "\nseed = " +
                             std::to_string(model.seed()) + "\n" + model.config().to_text();
  w.le<std::uint64_t>(config.size());
  w.bytes(config.data(), config.size());
  w.le<std::uint64_t>(model.params().size());
  for (const auto& p : model.params()) {
    w.str32(p.name);
    w.le<std::uint8_t>(static_cast<std::uint8_t>(precision_of<T>()));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.dims()) w.le<std::uint64_t>(d);
    write_payload(w, p.value);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kData, "cannot open " + path + " for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  require(out.good(), ErrorKind::kData, "failed writing " + path);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path, std::optional<ModelKind> expected_kind) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kData, "cannot open checkpoint " + path);
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  const std::string magic = r.str(4);
  require(magic == std::string(kCheckpointMagic, 4), ErrorKind::kFormat, "bad magic bytes in " + path);
  const auto version = r.le<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorKind::kFormat,
          "unsupported checkpoint version " + std::to_string(version));
  const auto config_len = r.le<std::uint64_t>();
  require(config_len < (1u << 20), ErrorKind::kFormat, "config block too large");
  const std::string config_text = r.str(config_len);

  std::optional<ModelKind> kind;
  std::optional<std::uint64_t> seed;
  NetworkConfig config;
  for (const auto& [key, value] : text::parse_key_values(config_text, ErrorKind::kFormat)) {
    if (key == "kind") {
      kind = parse_kind(value);
    } else if (key == "seed") {
      seed = text::parse_uint(value, "seed");
    } else {
      require(config.set(key, value), ErrorKind::kFormat, "unknown config key '" + key + "' in checkpoint");
    }
  }
  require(kind.has_value() && seed.has_value(), ErrorKind::kFormat, "checkpoint config lacks kind or seed");
  if (expected_kind && *expected_kind != *kind)
    fail(ErrorKind::kConfig, std::string("config mismatch: checkpoint holds a ") + kind_name(*kind) +
                                 " model, expected " + kind_name(*expected_kind));

  Model<T> model(*kind, config, *seed);
  const auto count = r.le<std::uint64_t>();
  require(count == model.params().size(), ErrorKind::kFormat,
          "checkpoint holds " + std::to_string(count) + " tensors, model needs " +
              std::to_string(model.params().size()));
  std::vector<Parameter<T>> params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint32_t>();
    require(name_len < 4096, ErrorKind::kFormat, "tensor name too long");
    std::string name = r.str(name_len);
    const auto code = r.le<std::uint8_t>();
    require(code <= 1, ErrorKind::kFormat, "unknown precision code " + std::to_string(code));
    const auto rank = r.le<std::uint32_t>();
    require(rank <= 8, ErrorKind::kFormat, "tensor rank too large");
    Shape dims(rank);
    for (auto& d : dims) d = r.le<std::uint64_t>();
    Tensor<T> value = read_payload<T>(r, static_cast<Precision>(code), std::move(dims));
    params.emplace_back(std::move(name), std::move(value));
  }
  require(r.done(), ErrorKind::kFormat, "trailing bytes after checkpoint payload");
  model.assign(std::move(params));
  return model;
}

#define DHS_INSTANTIATE_NETWORK(T)                                                                         \
  template class Model<T>;                                                                               \
  template Model<T> build_unet<T>(const NetworkConfig&, std::uint64_t);                                  \
  template Model<T> build_dhsnet<T>(const NetworkConfig&, std::uint64_t);                                \
  template Model<T> build_model<T>(ModelKind, const NetworkConfig&, std::uint64_t);                      \
  template Tensor<T> heatmap_head_forward<T>(const Model<T>&, const Tensor<T>&);                         \
  template class Sgd<T>;                                                                                 \
  template StepLoss train_step<T>(Model<T>&, const Batch<T>&, Sgd<T>&, const TrainConfig&);              \
  template void save_checkpoint<T>(const Model<T>&, const std::string&);                                 \
  template Model<T> load_checkpoint<T>(const std::string&, std::optional<ModelKind>);

DHS_INSTANTIATE_NETWORK(float)
DHS_INSTANTIATE_NETWORK(double)

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;

#undef DHS_INSTANTIATE_NETWORK

}  // namespace dhs::net
