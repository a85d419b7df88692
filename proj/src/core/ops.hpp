// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Standard differentiable operators on NCHW tensors. Every forward has an
// explicit backward; there is no autodiff graph. Saved state needed by a
// backward is whatever the caller passes back in.

#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace dhs::ops {

using LabelMap = Tensor<std::int32_t>;

inline constexpr std::int32_t kIgnoreId = 255;

struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;

  static ConvSpec square(std::size_t cin, std::size_t cout, std::size_t kernel, std::size_t stride,
                         std::size_t pad) {
    return {cin, cout, kernel, kernel, stride, stride, pad, pad};
  }

  std::size_t taps() const { return kernel_h * kernel_w; }
  // Throws a shape error when the window does not fit.
  std::size_t out_h(std::size_t in_h) const;
  std::size_t out_w(std::size_t in_w) const;
  Shape weight_dims() const { return {out_channels, in_channels, kernel_h, kernel_w}; }
  void validate() const;
};

// Column buffer for an im2col-style lowering: rows are (channel, tap),
// columns are output positions.
template <typename T>
void im2col(const T* image, std::size_t channels, std::size_t height, std::size_t width, const ConvSpec& spec,
            std::size_t out_h, std::size_t out_w, T* columns);
template <typename T>
void col2im_add(const T* columns, std::size_t channels, std::size_t height, std::size_t width, const ConvSpec& spec,
                std::size_t out_h, std::size_t out_w, T* image);

// Row-major C[m,n] (+)= op(A) * op(B).
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         const ConvSpec& spec);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input, const Tensor<T>& weights,
                             const ConvSpec& spec);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  // Flat index into the input tensor of each output's maximum.
  std::vector<std::size_t> argmax;
};

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                              const Shape& input_dims);

// Stride-2, 2x2 transposed convolution. weights: [Cin, Cout, 2, 2], bias: [Cout].
template <typename T>
Tensor<T> transposed_conv2x2_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> transposed_conv2x2_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                                         const Tensor<T>& weights);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input);
template <typename T>
void relu_inplace(Tensor<T>& t);

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_output);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, std::size_t first_channels);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b);

template <typename T>
struct CrossEntropy {
  T loss = 0;
  std::size_t counted = 0;  // non-ignored pixels
  Tensor<T> grad_logits;    // d loss / d logits
};

// Mean over non-ignored pixels of -log softmax(logits)[label].
template <typename T>
T softmax_ce_forward(const Tensor<T>& logits, const LabelMap& labels, std::int32_t ignore_id = kIgnoreId);
template <typename T>
CrossEntropy<T> softmax_ce(const Tensor<T>& logits, const LabelMap& labels, std::int32_t ignore_id = kIgnoreId);

// Per-pixel argmax over channels; ties go to the lowest class id.
template <typename T>
LabelMap argmax_channels(const Tensor<T>& logits);

}  // namespace dhs::ops
