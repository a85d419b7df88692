// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Bilinear sampling and deformable convolution.
//
// Offset fields have dims [N, 2*kh*kw, H', W']. Channel 2*t holds the row
// displacement and 2*t+1 the column displacement of kernel tap t, taps in
// row-major order. Samples that fall outside the map read zeros.

#pragma once

#include <span>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

namespace dhs::deform {

struct SamplePoint {
  double row = 0;
  double col = 0;
};

/// Interpolation stencil for one fractional point. The lower neighbor is
/// ceil(p) - 1, so the fractional weight lies in (0, 1]; at integer p all
/// weight sits on the upper neighbor and derivatives come from the left
/// branch of the hat function.
template <typename T>
struct Stencil {
  std::ptrdiff_t y0 = 0;
  std::ptrdiff_t x0 = 0;
  T ly = 0;
  T lx = 0;
  bool outside = true;  // all four neighbors are off the map

  static Stencil at(T row, T col, std::size_t height, std::size_t width);
};

template <typename T>
T bilinear_sample(const T* plane, std::size_t height, std::size_t width, T row, T col);

// map: [C,H,W]; returns one value per channel.
template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& map, SamplePoint p);

template <typename T>
struct SampleGrad {
  Tensor<T> grad_map;  // [C,H,W]
  T grad_row = 0;
  T grad_col = 0;
};

template <typename T>
SampleGrad<T> bilinear_sample_backward(std::span<const T> grad_value, const Tensor<T>& saved_map, SamplePoint p);

/// Offset-predictor geometry for a main convolution: same window, stride and
/// padding, 2 * taps output channels.
ops::ConvSpec offset_spec(const ops::ConvSpec& main);

template <typename T>
Tensor<T> offset_predictor_forward(const Tensor<T>& input, const Tensor<T>& predictor_weights,
                                   const Tensor<T>& predictor_bias, const ops::ConvSpec& main);

template <typename T>
Tensor<T> deform_conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& offsets, const ops::ConvSpec& spec);

template <typename T>
struct DeformGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
  Tensor<T> offsets;
};

template <typename T>
DeformGrads<T> deform_conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                                      const Tensor<T>& weights, const Tensor<T>& offsets, const ops::ConvSpec& spec);

}  // namespace dhs::deform
