// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "deform.hpp"

#include <cmath>

namespace dhs::deform {

template <typename T>
Stencil<T> Stencil<T>::at(T row, T col, std::size_t height, std::size_t width) {
  Stencil s;
  const T h = static_cast<T>(height), w = static_cast<T>(width);
  // Hat weights vanish one pixel past the border.
  if (!(row > T(-1) && row < h && col > T(-1) && col < w)) return s;
  s.y0 = static_cast<std::ptrdiff_t>(std::ceil(row)) - 1;
  s.x0 = static_cast<std::ptrdiff_t>(std::ceil(col)) - 1;
  s.ly = row - static_cast<T>(s.y0);
  s.lx = col - static_cast<T>(s.x0);
  s.outside = false;
  return s;
}

namespace {

// Corner k = 2*dy + dx. Flat plane index, or -1 when off the map.
struct Corners {
  std::ptrdiff_t index[4];
};

template <typename T>
Corners corners(const Stencil<T>& s, std::size_t height, std::size_t width) {
  Corners c{{-1, -1, -1, -1}};
  if (s.outside) return c;
  const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);
  for (int dy = 0; dy < 2; ++dy)
    for (int dx = 0; dx < 2; ++dx) {
      const std::ptrdiff_t y = s.y0 + dy, x = s.x0 + dx;
      if (y >= 0 && y < h && x >= 0 && x < w) c.index[2 * dy + dx] = y * w + x;
    }
  return c;
}

template <typename T>
void corner_weights(const Stencil<T>& s, T out[4]) {
  out[0] = (T(1) - s.ly) * (T(1) - s.lx);
  out[1] = (T(1) - s.ly) * s.lx;
  out[2] = s.ly * (T(1) - s.lx);
  out[3] = s.ly * s.lx;
}

template <typename T>
T read(const T* plane, std::ptrdiff_t index) {
  return index < 0 ? T(0) : plane[index];
}

// One precomputed sampling site of a deformable convolution.
template <typename T>
struct Site {
  Stencil<T> stencil;
  Corners corners;
  T weight[4];
};

template <typename T>
void check_deform_operands(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& offsets,
                           const ops::ConvSpec& spec) {
  spec.validate();
  require_rank(input.dims(), 4, "deform conv input");
  require(input.dim(1) == spec.in_channels, ErrorKind::kShape, "deform conv input channels do not match spec");
  require_dims(weights.dims(), spec.weight_dims(), "deform conv weights");
  const std::size_t oh = spec.out_h(input.dim(2)), ow = spec.out_w(input.dim(3));
  require_dims(offsets.dims(), {input.dim(0), 2 * spec.taps(), oh, ow}, "deform conv offsets");
}

// Sites for batch element n, laid out [tap][position].
template <typename T>
std::vector<Site<T>> build_sites(const Tensor<T>& offsets, std::size_t n, const ops::ConvSpec& spec,
                                 std::size_t height, std::size_t width, std::size_t oh, std::size_t ow) {
  const std::size_t taps = spec.taps(), positions = oh * ow;
  std::vector<Site<T>> sites(taps * positions);
  const T* off = offsets.ptr() + n * 2 * taps * positions;
  for (std::size_t t = 0; t < taps; ++t) {
    const std::size_t ky = t / spec.kernel_w, kx = t % spec.kernel_w;
    const T* dy = off + (2 * t) * positions;
    const T* dx = off + (2 * t + 1) * positions;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t p = oy * ow + ox;
        const T row = static_cast<T>(static_cast<std::ptrdiff_t>(oy * spec.stride_h + ky) -
                                     static_cast<std::ptrdiff_t>(spec.pad_h)) + dy[p];
        const T col = static_cast<T>(static_cast<std::ptrdiff_t>(ox * spec.stride_w + kx) -
                                     static_cast<std::ptrdiff_t>(spec.pad_w)) + dx[p];
        Site<T>& site = sites[t * positions + p];
        site.stencil = Stencil<T>::at(row, col, height, width);
        site.corners = corners(site.stencil, height, width);
        corner_weights(site.stencil, site.weight);
      }
  }
  return sites;
}

// Deformable im2col: columns[(c*taps + t), p].
template <typename T>
void deform_columns(const T* image, std::size_t channels, std::size_t plane_size, const std::vector<Site<T>>& sites,
                    std::size_t taps, std::size_t positions, T* columns) {
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = image + c * plane_size;
    for (std::size_t t = 0; t < taps; ++t) {
      T* dst = columns + (c * taps + t) * positions;
      const Site<T>* site = sites.data() + t * positions;
      for (std::size_t p = 0; p < positions; ++p, ++site) {
        T v = 0;
        for (int k = 0; k < 4; ++k)
          if (site->corners.index[k] >= 0) v += site->weight[k] * plane[site->corners.index[k]];
        dst[p] = v;
      }
    }
  }
}

}  // namespace

template <typename T>
T bilinear_sample(const T* plane, std::size_t height, std::size_t width, T row, T col) {
  const Stencil<T> s = Stencil<T>::at(row, col, height, width);
  const Corners c = corners(s, height, width);
  T w[4];
  corner_weights(s, w);
  T v = 0;
  for (int k = 0; k < 4; ++k) v += w[k] * read(plane, c.index[k]);
  return v;
}

template <typename T>
std::vector<T> bilinear_sample(const Tensor<T>& map, SamplePoint p) {
  require_rank(map.dims(), 3, "bilinear map");
  const std::size_t channels = map.dim(0), height = map.dim(1), width = map.dim(2);
  std::vector<T> out(channels);
  for (std::size_t c = 0; c < channels; ++c)
    out[c] = bilinear_sample(map.ptr() + c * height * width, height, width, static_cast<T>(p.row),
                             static_cast<T>(p.col));
  return out;
}

template <typename T>
SampleGrad<T> bilinear_sample_backward(std::span<const T> grad_value, const Tensor<T>& saved_map, SamplePoint p) {
  require_rank(saved_map.dims(), 3, "bilinear map");
  const std::size_t channels = saved_map.dim(0), height = saved_map.dim(1), width = saved_map.dim(2);
  require(grad_value.size() == channels, ErrorKind::kShape, "bilinear grad needs one value per channel");
  SampleGrad<T> g{zeros_like(saved_map), T(0), T(0)};
  const Stencil<T> s = Stencil<T>::at(static_cast<T>(p.row), static_cast<T>(p.col), height, width);
  const Corners c = corners(s, height, width);
  T w[4];
  corner_weights(s, w);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const T* plane = saved_map.ptr() + ch * height * width;
    T* gplane = g.grad_map.ptr() + ch * height * width;
    const T gv = grad_value[ch];
    for (int k = 0; k < 4; ++k)
      if (c.index[k] >= 0) gplane[c.index[k]] += gv * w[k];
    const T v00 = read(plane, c.index[0]), v01 = read(plane, c.index[1]);
    const T v10 = read(plane, c.index[2]), v11 = read(plane, c.index[3]);
    g.grad_row += gv * ((T(1) - s.lx) * (v10 - v00) + s.lx * (v11 - v01));
    g.grad_col += gv * ((T(1) - s.ly) * (v01 - v00) + s.ly * (v11 - v10));
  }
  return g;
}

ops::ConvSpec offset_spec(const ops::ConvSpec& main) {
  ops::ConvSpec s = main;
  s.out_channels = 2 * main.taps();
  return s;
}

template <typename T>
Tensor<T> offset_predictor_forward(const Tensor<T>& input, const Tensor<T>& predictor_weights,
                                   const Tensor<T>& predictor_bias, const ops::ConvSpec& main) {
  return ops::conv2d_forward(input, predictor_weights, predictor_bias, offset_spec(main));
}

template <typename T>
Tensor<T> deform_conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                                const Tensor<T>& offsets, const ops::ConvSpec& spec) {
  check_deform_operands(input, weights, offsets, spec);
  require_dims(bias.dims(), {spec.out_channels}, "deform conv bias");
  require_finite(input, "deform conv input");
  require_finite(offsets, "deform conv offsets");

  const std::size_t batch = input.dim(0), height = input.dim(2), width = input.dim(3);
  const std::size_t oh = spec.out_h(height), ow = spec.out_w(width);
  const std::size_t positions = oh * ow, taps = spec.taps(), depth = spec.in_channels * taps;
  Tensor<T> output({batch, spec.out_channels, oh, ow});
  std::vector<T> columns(depth * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    const auto sites = build_sites(offsets, n, spec, height, width, oh, ow);
    deform_columns(input.ptr() + n * spec.in_channels * height * width, spec.in_channels, height * width, sites, taps,
                   positions, columns.data());
    T* dst = output.ptr() + n * spec.out_channels * positions;
    for (std::size_t c = 0; c < spec.out_channels; ++c) std::fill(dst + c * positions, dst + (c + 1) * positions, bias[c]);
    ops::gemm<T>(false, false, spec.out_channels, positions, depth, weights.ptr(), columns.data(), dst, true);
  }
  return output;
}

template <typename T>
DeformGrads<T> deform_conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& saved_input,
                                      const Tensor<T>& weights, const Tensor<T>& offsets, const ops::ConvSpec& spec) {
  check_deform_operands(saved_input, weights, offsets, spec);
  const std::size_t batch = saved_input.dim(0), height = saved_input.dim(2), width = saved_input.dim(3);
  const std::size_t oh = spec.out_h(height), ow = spec.out_w(width);
  require_dims(grad_out.dims(), {batch, spec.out_channels, oh, ow}, "deform conv grad_out");

  const std::size_t positions = oh * ow, taps = spec.taps(), depth = spec.in_channels * taps;
  const std::size_t plane_size = height * width;
  DeformGrads<T> grads{zeros_like(saved_input), zeros_like(weights), Tensor<T>({spec.out_channels}),
                       zeros_like(offsets)};
  std::vector<T> columns(depth * positions);
  std::vector<T> grad_columns(depth * positions);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* g = grad_out.ptr() + n * spec.out_channels * positions;
    for (std::size_t c = 0; c < spec.out_channels; ++c) {
      T sum = 0;
      for (std::size_t p = 0; p < positions; ++p) sum += g[c * positions + p];
      grads.bias[c] += sum;
    }
    const T* image = saved_input.ptr() + n * spec.in_channels * plane_size;
    const auto sites = build_sites(offsets, n, spec, height, width, oh, ow);
    deform_columns(image, spec.in_channels, plane_size, sites, taps, positions, columns.data());
    ops::gemm<T>(false, true, spec.out_channels, depth, positions, g, columns.data(), grads.weights.ptr(), true);
    ops::gemm<T>(true, false, depth, positions, spec.out_channels, weights.ptr(), g, grad_columns.data(), false);

    T* gimage = grads.input.ptr() + n * spec.in_channels * plane_size;
    T* goff = grads.offsets.ptr() + n * 2 * taps * positions;
    for (std::size_t c = 0; c < spec.in_channels; ++c) {
      const T* plane = image + c * plane_size;
      T* gplane = gimage + c * plane_size;
      for (std::size_t t = 0; t < taps; ++t) {
        const T* gcol = grad_columns.data() + (c * taps + t) * positions;
        T* grow = goff + (2 * t) * positions;
        T* gcolumn = goff + (2 * t + 1) * positions;
        const Site<T>* site = sites.data() + t * positions;
        for (std::size_t p = 0; p < positions; ++p, ++site) {
          if (site->stencil.outside) continue;
          const T gv = gcol[p];
          const auto& idx = site->corners.index;
          for (int k = 0; k < 4; ++k)
            if (idx[k] >= 0) gplane[idx[k]] += gv * site->weight[k];
          const T v00 = read(plane, idx[0]), v01 = read(plane, idx[1]);
          const T v10 = read(plane, idx[2]), v11 = read(plane, idx[3]);
          const T ly = site->stencil.ly, lx = site->stencil.lx;
          grow[p] += gv * ((T(1) - lx) * (v10 - v00) + lx * (v11 - v01));
          gcolumn[p] += gv * ((T(1) - ly) * (v01 - v00) + ly * (v11 - v10));
        }
      }
    }
  }
  return grads;
}

#define DHS_INSTANTIATE_DEFORM(T)                                                                                 \
  template struct Stencil<T>;                                                                                   \
  template T bilinear_sample<T>(const T*, std::size_t, std::size_t, T, T);                                      \
  template std::vector<T> bilinear_sample<T>(const Tensor<T>&, SamplePoint);                                    \
  template SampleGrad<T> bilinear_sample_backward<T>(std::span<const T>, const Tensor<T>&, SamplePoint);        \
  template Tensor<T> offset_predictor_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                                 const ops::ConvSpec&);                                         \
  template Tensor<T> deform_conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                              const Tensor<T>&, const ops::ConvSpec&);                          \
  template DeformGrads<T> deform_conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                                    const Tensor<T>&, const ops::ConvSpec&);

DHS_INSTANTIATE_DEFORM(float)
DHS_INSTANTIATE_DEFORM(double)

#undef DHS_INSTANTIATE_DEFORM

}  // namespace dhs::deform
