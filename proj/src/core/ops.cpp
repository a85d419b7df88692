// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace dhs::ops {

std::size_t ConvSpec::out_h(std::size_t in_h) const {
  require(in_h + 2 * pad_h >= kernel_h, ErrorKind::kShape,
          "kernel height " + std::to_string(kernel_h) + " exceeds padded input height " + std::to_string(in_h));
  return (in_h + 2 * pad_h - kernel_h) / stride_h + 1;
}

std::size_t ConvSpec::out_w(std::size_t in_w) const {
  require(in_w + 2 * pad_w >= kernel_w, ErrorKind::kShape,
          "kernel width " + std::to_string(kernel_w) + " exceeds padded input width " + std::to_string(in_w));
  return (in_w + 2 * pad_w - kernel_w) / stride_w + 1;
}

void ConvSpec::validate() const {
  require(kernel_h >= 1 && kernel_w >= 1, ErrorKind::kShape, "kernel extents must be >= 1");
  require(stride_h >= 1 && stride_w >= 1, ErrorKind::kShape, "strides must be >= 1");
  require(in_channels >= 1 && out_channels >= 1, ErrorKind::kShape, "channel counts must be >= 1");
}

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto em = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ek = static_cast<Eigen::Index>(k);
  Eigen::Map<Mat> out(c, em, en);
  if (k == 0) {
    if (!accumulate) out.setZero();
    return;
  }
  Eigen::Map<const Mat> ma(a, trans_a ? ek : em, trans_a ? em : ek);
  Eigen::Map<const Mat> mb(b, trans_b ? en : ek, trans_b ? ek : en);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate)
      out.noalias() += lhs * rhs;
    else
      out.noalias() = lhs * rhs;
  };
  if (!trans_a && !trans_b) run(ma, mb);
  if (!trans_a && trans_b) run(ma, mb.transpose());
  if (trans_a && !trans_b) run(ma.transpose(), mb);
  if (trans_a && trans_b) run(ma.transpose(), mb.transpose());
}

template <typename T>
void im2col(const T* image, std::size_t channels, std::size_t height, std::size_t width, const ConvSpec& spec,
            std::size_t out_h, std::size_t out_w, T* columns) {
  const auto ih = static_cast<std::ptrdiff_t>(height);
  const auto iw = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = image + c * height * width;
    for (std::size_t ky = 0; ky < spec.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < spec.kernel_w; ++kx) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * spec.stride_h + ky) -
                                   static_cast<std::ptrdiff_t>(spec.pad_h);
          T* dst = columns + oy * out_w;
          if (y < 0 || y >= ih) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* row = plane + y * iw;
          const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(spec.pad_w);
          if (spec.stride_w == 1) {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const std::ptrdiff_t x = x0 + static_cast<std::ptrdiff_t>(ox);
              dst[ox] = (x >= 0 && x < iw) ? row[x] : T(0);
            }
          } else {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const std::ptrdiff_t x = x0 + static_cast<std::ptrdiff_t>(ox * spec.stride_w);
              dst[ox] = (x >= 0 && x < iw) ? row[x] : T(0);
            }
          }
        }
        columns += out_h * out_w;
      }
    }
  }
}

template <typename T>
void col2im_add(const T* columns, std::size_t channels, std::size_t height, std::size_t width, const ConvSpec& spec,
                std::size_t out_h, std::size_t out_w, T* image) {
  const auto ih = static_cast<std::ptrdiff_t>(height);
  const auto iw = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = image + c * height * width;
    for (std::size_t ky = 0; ky < spec.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < spec.kernel_w; ++kx) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * spec.stride_h + ky) -
                                   static_cast<std::ptrdiff_t>(spec.pad_h);
          if (y < 0 || y >= ih) continue;
          const T* src = columns + oy * out_w;
          T* row = plane + y * iw;
          const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(spec.pad_w);
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t x = x0 + static_cast<std::ptrdiff_t>(ox * spec.stride_w);
            if (x >= 0 && x < iw) row[x] += src[ox];
          }
        }
        columns += out_h * out_w;
      }
    }
  }
}

namespace {

bool is_pointwise(const ConvSpec& spec) {
  return spec.kernel_h == 1 && spec.kernel_w == 1 && spec.stride_h == 1 && spec.stride_w == 1 &&
         spec.pad_h == 0 && spec.pad_w == 0;
}

template <typename T>
void check_conv_operands(const Tensor<T>& input, const Tensor<T>& weights, const ConvSpec& spec) {
  spec.validate();
  require_rank(input.dims(), 4, "conv2d input");
  require(input.dim(1) == spec.in_channels, ErrorKind::kShape,
          "conv2d input has " + std::to_string(input.dim(1)) + " channels, spec expects " +
              std::to_string(spec.in_channels));
  require_dims(weights.dims(), spec.weight_dims(), "conv2d weights");
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         const ConvSpec& spec) {
  check_conv_operands(input, weights, spec);
  require_dims(bias.dims(), {spec.out_channels}, "conv2d bias");
  require_finite(input, "conv2d input");

  const std::size_t batch = input.dim(0), height = input.dim(2), width = input.dim(3);
  const std::size_t oh = spec.out_h(height), ow = spec.out_w(width);
  const std::size_t positions = oh * ow;
  const std::size_t depth = spec.in_channels * spec.taps();

  Tensor<T> output({batch, spec.out_channels, oh, ow});
  const bool pointwise = is_pointwise(spec);
  std::vector<T> columns(pointwise ? 0 : depth * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* src = input.ptr() + n * spec.in_channels * height * width;
    if (!pointwise) {
      im2col(src, spec.in_channels, height, width, spec, oh, ow, columns.data());
      src = columns.data();
    }
    T* dst = output.ptr() + n * spec.out_channels * positions;
    for (std::size_t c = 0; c < spec.out_channels; ++c) std::fill(dst + c * positions, dst + (c + 1) * positions, bias[c]);
    gemm<T>(false, false, spec.out_channels, positions, depth, weights.ptr(), src, dst, true);
  }
  return output;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input, const Tensor<T>& weights,
                             const ConvSpec& spec) {
  check_conv_operands(saved_input, weights, spec);
  const std::size_t batch = saved_input.dim(0), height = saved_input.dim(2), width = saved_input.dim(3);
  const std::size_t oh = spec.out_h(height), ow = spec.out_w(width);
  require_dims(grad_out.dims(), {batch, spec.out_channels, oh, ow}, "conv2d grad_out");

  const std::size_t positions = oh * ow;
  const std::size_t depth = spec.in_channels * spec.taps();
  ConvGrads<T> grads{zeros_like(saved_input), zeros_like(weights), Tensor<T>({spec.out_channels})};

  const bool pointwise = is_pointwise(spec);
  std::vector<T> columns(pointwise ? 0 : depth * positions);
  std::vector<T> grad_columns(pointwise ? 0 : depth * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* g = grad_out.ptr() + n * spec.out_channels * positions;
    for (std::size_t c = 0; c < spec.out_channels; ++c) {
      T sum = 0;
      for (std::size_t p = 0; p < positions; ++p) sum += g[c * positions + p];
      grads.bias[c] += sum;
    }
    const T* src = saved_input.ptr() + n * spec.in_channels * height * width;
    T* gin = grads.input.ptr() + n * spec.in_channels * height * width;
    if (pointwise) {
      gemm<T>(false, true, spec.out_channels, depth, positions, g, src, grads.weights.ptr(), true);
      gemm<T>(true, false, depth, positions, spec.out_channels, weights.ptr(), g, gin, false);
    } else {
      im2col(src, spec.in_channels, height, width, spec, oh, ow, columns.data());
      gemm<T>(false, true, spec.out_channels, depth, positions, g, columns.data(), grads.weights.ptr(), true);
      gemm<T>(true, false, depth, positions, spec.out_channels, weights.ptr(), g, grad_columns.data(), false);
      col2im_add(grad_columns.data(), spec.in_channels, height, width, spec, oh, ow, gin);
    }
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input) {
  require_rank(input.dims(), 4, "maxpool input");
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  require(height % 2 == 0 && width % 2 == 0, ErrorKind::kShape,
          "maxpool2x2 needs even spatial extents, got " + shape_str(input.dims()));
  const std::size_t oh = height / 2, ow = width / 2;
  PoolResult<T> result{Tensor<T>({batch, channels, oh, ow}), std::vector<std::size_t>(batch * channels * oh * ow)};
  std::size_t out = 0;
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const std::size_t base = plane * height * width;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++out) {
        const std::size_t first = base + 2 * y * width + 2 * x;
        const std::size_t window[4] = {first, first + 1, first + width, first + width + 1};
        std::size_t best = window[0];
        for (std::size_t i = 1; i < 4; ++i)
          if (input[window[i]] > input[best]) best = window[i];
        result.output[out] = input[best];
        result.argmax[out] = best;
      }
    }
  }
  return result;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                              const Shape& input_dims) {
  require(grad_out.size() == argmax.size(), ErrorKind::kShape, "maxpool grad_out does not match saved indices");
  Tensor<T> grad_input(input_dims);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    require(argmax[i] < grad_input.size(), ErrorKind::kInternal, "maxpool argmax index out of bounds");
    grad_input[argmax[i]] += grad_out[i];
  }
  return grad_input;
}

namespace {

template <typename T>
void check_transposed_operands(const Tensor<T>& input, const Tensor<T>& weights) {
  require_rank(input.dims(), 4, "transposed conv input");
  require_rank(weights.dims(), 4, "transposed conv weights");
  require(weights.dim(0) == input.dim(1) && weights.dim(2) == 2 && weights.dim(3) == 2, ErrorKind::kShape,
          "transposed conv weights " + shape_str(weights.dims()) + " do not match input " +
              shape_str(input.dims()));
}

}  // namespace

template <typename T>
Tensor<T> transposed_conv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  check_transposed_operands(input, weights);
  const std::size_t batch = input.dim(0), cin = input.dim(1), height = input.dim(2), width = input.dim(3);
  const std::size_t cout = weights.dim(1);
  require_dims(bias.dims(), {cout}, "transposed conv bias");
  require_finite(input, "transposed conv input");

  const std::size_t positions = height * width;
  Tensor<T> output({batch, cout, 2 * height, 2 * width});
  std::vector<T> scratch(cout * 4 * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    gemm<T>(true, false, cout * 4, positions, cin, weights.ptr(), input.ptr() + n * cin * positions, scratch.data(),
            false);
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t tap = 0; tap < 4; ++tap) {
        const T* src = scratch.data() + (co * 4 + tap) * positions;
        const std::size_t dy = tap / 2, dx = tap % 2;
        for (std::size_t y = 0; y < height; ++y)
          for (std::size_t x = 0; x < width; ++x) output.at(n, co, 2 * y + dy, 2 * x + dx) = src[y * width + x] + bias[co];
      }
  }
  return output;
}

template <typename T>
ConvGrads<T> transposed_conv2x2_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                                         const Tensor<T>& weights) {
  check_transposed_operands(saved_input, weights);
  const std::size_t batch = saved_input.dim(0), cin = saved_input.dim(1), height = saved_input.dim(2),
                    width = saved_input.dim(3);
  const std::size_t cout = weights.dim(1);
  require_dims(grad_out.dims(), {batch, cout, 2 * height, 2 * width}, "transposed conv grad_out");

  const std::size_t positions = height * width;
  ConvGrads<T> grads{zeros_like(saved_input), zeros_like(weights), Tensor<T>({cout})};
  std::vector<T> gathered(cout * 4 * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      T sum = 0;
      for (std::size_t tap = 0; tap < 4; ++tap) {
        T* dst = gathered.data() + (co * 4 + tap) * positions;
        const std::size_t dy = tap / 2, dx = tap % 2;
        for (std::size_t y = 0; y < height; ++y)
          for (std::size_t x = 0; x < width; ++x) dst[y * width + x] = grad_out.at(n, co, 2 * y + dy, 2 * x + dx);
      }
      for (std::size_t i = 0; i < 4 * height * width; ++i) sum += grad_out[(n * cout + co) * 4 * positions + i];
      grads.bias[co] += sum;
    }
    const T* x = saved_input.ptr() + n * cin * positions;
    gemm<T>(false, false, cin, positions, cout * 4, weights.ptr(), gathered.data(), grads.input.ptr() + n * cin * positions,
            false);
    gemm<T>(false, true, cin, cout * 4, positions, x, gathered.data(), grads.weights.ptr(), true);
  }
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  relu_inplace(out);
  return out;
}

template <typename T>
void relu_inplace(Tensor<T>& t) {
  for (T& v : t.data()) v = v > T(0) ? v : T(0);
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input) {
  require_dims(grad_out.dims(), saved_input.dims(), "relu grad_out");
  Tensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(saved_input[i] > T(0))) grad[i] = T(0);
  return grad;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out(input.dims());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T x = input[i];
    // Split on sign so exp never overflows.
    if (x >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-x));
    } else {
      const T e = std::exp(x);
      out[i] = e / (T(1) + e);
    }
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_output) {
  require_dims(grad_out.dims(), saved_output.dims(), "sigmoid grad_out");
  Tensor<T> grad(grad_out.dims());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const T s = saved_output[i];
    grad[i] = grad_out[i] * s * (T(1) - s);
  }
  return grad;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.dims(), 4, "concat lhs");
  require_rank(b.dims(), 4, "concat rhs");
  require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3), ErrorKind::kShape,
          "concat_channels mismatch: " + shape_str(a.dims()) + " vs " + shape_str(b.dims()));
  const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
  Tensor<T> out({batch, ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(a.ptr() + n * ca * plane, ca * plane, out.ptr() + n * (ca + cb) * plane);
    std::copy_n(b.ptr() + n * cb * plane, cb * plane, out.ptr() + (n * (ca + cb) + ca) * plane);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, std::size_t first_channels) {
  require_rank(t.dims(), 4, "split input");
  require(first_channels <= t.dim(1), ErrorKind::kShape, "split point beyond channel count");
  const std::size_t batch = t.dim(0), total = t.dim(1), plane = t.dim(2) * t.dim(3);
  const std::size_t rest = total - first_channels;
  Tensor<T> a({batch, first_channels, t.dim(2), t.dim(3)});
  Tensor<T> b({batch, rest, t.dim(2), t.dim(3)});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(t.ptr() + n * total * plane, first_channels * plane, a.ptr() + n * first_channels * plane);
    std::copy_n(t.ptr() + (n * total + first_channels) * plane, rest * plane, b.ptr() + n * rest * plane);
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out = a;
  add_inplace(out, b);
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b) {
  require_dims(b.dims(), acc.dims(), "add");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b[i];
}

template <typename T>
CrossEntropy<T> softmax_ce(const Tensor<T>& logits, const LabelMap& labels, std::int32_t ignore_id) {
  require_rank(logits.dims(), 4, "cross-entropy logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1), height = logits.dim(2), width = logits.dim(3);
  require_dims(labels.dims(), {batch, height, width}, "cross-entropy labels");
  const std::size_t plane = height * width;

  CrossEntropy<T> result{T(0), 0, zeros_like(logits)};
  double total = 0.0;
  std::vector<T> probs(classes);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::int32_t label = labels[n * plane + p];
      if (label == ignore_id) continue;
      require(label >= 0 && static_cast<std::size_t>(label) < classes, ErrorKind::kData,
              "label " + std::to_string(label) + " outside [0," + std::to_string(classes) + ")");
      const T* z = logits.ptr() + n * classes * plane + p;
      T zmax = z[0];
      for (std::size_t c = 1; c < classes; ++c) zmax = std::max(zmax, z[c * plane]);
      T sum = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        probs[c] = std::exp(z[c * plane] - zmax);
        sum += probs[c];
      }
      total += static_cast<double>(std::log(sum) + zmax - z[static_cast<std::size_t>(label) * plane]);
      T* g = result.grad_logits.ptr() + n * classes * plane + p;
      for (std::size_t c = 0; c < classes; ++c) g[c * plane] = probs[c] / sum;
      g[static_cast<std::size_t>(label) * plane] -= T(1);
      ++result.counted;
    }
  }
  if (result.counted == 0) return result;
  const T inv = T(1) / static_cast<T>(result.counted);
  for (T& g : result.grad_logits.data()) g *= inv;
  result.loss = static_cast<T>(total / static_cast<double>(result.counted));
  require(std::isfinite(result.loss), ErrorKind::kNumeric, "cross-entropy loss is not finite");
  return result;
}

template <typename T>
T softmax_ce_forward(const Tensor<T>& logits, const LabelMap& labels, std::int32_t ignore_id) {
  return softmax_ce(logits, labels, ignore_id).loss;
}

template <typename T>
LabelMap argmax_channels(const Tensor<T>& logits) {
  require_rank(logits.dims(), 4, "argmax logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1), plane = logits.dim(2) * logits.dim(3);
  LabelMap out({batch, logits.dim(2), logits.dim(3)});
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t p = 0; p < plane; ++p) {
      const T* z = logits.ptr() + n * classes * plane + p;
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c)
        if (z[c * plane] > z[best * plane]) best = c;
      out[n * plane + p] = static_cast<std::int32_t>(best);
    }
  return out;
}

#define DHS_INSTANTIATE_OPS(T)                                                                                   \
  template void gemm<T>(bool, bool, std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);      \
  template void im2col<T>(const T*, std::size_t, std::size_t, std::size_t, const ConvSpec&, std::size_t,       \
                          std::size_t, T*);                                                                    \
  template void col2im_add<T>(const T*, std::size_t, std::size_t, std::size_t, const ConvSpec&, std::size_t,   \
                              std::size_t, T*);                                                                \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvSpec&);  \
  template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                           const ConvSpec&);                                                   \
  template PoolResult<T> maxpool2x2_forward<T>(const Tensor<T>&);                                              \
  template Tensor<T> maxpool2x2_backward<T>(const Tensor<T>&, const std::vector<std::size_t>&, const Shape&);  \
  template Tensor<T> transposed_conv2x2_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template ConvGrads<T> transposed_conv2x2_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                                                        \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                                     \
  template void relu_inplace<T>(Tensor<T>&);                                                                   \
  template Tensor<T> sigmoid_forward<T>(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template std::pair<Tensor<T>, Tensor<T>> split_channels<T>(const Tensor<T>&, std::size_t);                   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                               \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);                                                  \
  template CrossEntropy<T> softmax_ce<T>(const Tensor<T>&, const LabelMap&, std::int32_t);                     \
  template T softmax_ce_forward<T>(const Tensor<T>&, const LabelMap&, std::int32_t);                           \
  template LabelMap argmax_channels<T>(const Tensor<T>&);

DHS_INSTANTIATE_OPS(float)
DHS_INSTANTIATE_OPS(double)

#undef DHS_INSTANTIATE_OPS

}  // namespace dhs::ops
