// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>

#include "deform.hpp"
#include "ops.hpp"
#include "test_util.hpp"

namespace dhs {
namespace {

using testing::max_rel_diff;
using testing::random_normal;

// Four-neighbor interpolation written from the textbook formula, zeros off-map.
double textbook_bilinear(const Tensor<double>& map, std::size_t c, double row, double col) {
  const long h = long(map.dim(1)), w = long(map.dim(2));
  const double fy = std::floor(row), fx = std::floor(col);
  double acc = 0;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      const long y = long(fy) + dy, x = long(fx) + dx;
      if (y < 0 || x < 0 || y >= h || x >= w) continue;
      const double wy = std::max(0.0, 1 - std::abs(row - double(y)));
      const double wx = std::max(0.0, 1 - std::abs(col - double(x)));
      acc += wy * wx * map[(c * map.dim(1) + std::size_t(y)) * map.dim(2) + std::size_t(x)];
    }
  return acc;
}

TEST(Bilinear, MatchesTextbookFormulaInsideAndAtBorders) {
  std::mt19937_64 rng(21);
  const auto map = random_normal(rng, {2, 5, 6});
  std::uniform_real_distribution<double> row(-1.5, 5.5), col(-1.5, 6.5);
  for (int i = 0; i < 200; ++i) {
    const deform::SamplePoint p{row(rng), col(rng)};
    const auto got = deform::bilinear_sample(map, p);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], textbook_bilinear(map, c, p.row, p.col), 1e-14);
  }
}

TEST(Bilinear, IntegerPointsReadThePixelExactly) {
  std::mt19937_64 rng(22);
  const auto map = random_normal(rng, {1, 4, 4});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      EXPECT_EQ(deform::bilinear_sample(map, {double(y), double(x)})[0], map[y * 4 + x]);
}

TEST(Bilinear, FarOutsideReadsZero) {
  const Tensor<double> map({1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(deform::bilinear_sample(map, {-1.0, 0.0})[0], 0.0);
  EXPECT_EQ(deform::bilinear_sample(map, {0.0, 2.0})[0], 0.0);
  EXPECT_EQ(deform::bilinear_sample(map, {7.3, -4.1})[0], 0.0);
  EXPECT_DOUBLE_EQ(deform::bilinear_sample(map, {-0.5, 0.0})[0], 0.5);
}

TEST(Bilinear, StencilUsesLeftNeighborConvention) {
  const auto s = deform::Stencil<double>::at(2.0, 3.25, 8, 8);
  EXPECT_EQ(s.y0, 1);
  EXPECT_EQ(s.ly, 1.0);
  EXPECT_EQ(s.x0, 3);
  EXPECT_DOUBLE_EQ(s.lx, 0.25);
}

TEST(Bilinear, BackwardDistributesTheCotangentByWeights) {
  std::mt19937_64 rng(23);
  const auto map = random_normal(rng, {2, 4, 4});
  const deform::SamplePoint p{1.3, 2.6};
  const double gv[] = {1.0, -2.0};
  const auto g = deform::bilinear_sample_backward<double>(std::span<const double>(gv), map, p);
  double s0 = 0, s1 = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    s0 += g.grad_map[i];
    s1 += g.grad_map[16 + i];
  }
  EXPECT_NEAR(s0, 1.0, 1e-14);
  EXPECT_NEAR(s1, -2.0, 1e-14);
  // d/drow of the interpolant by a one-sided slope between the two row neighbors.
  double expect_row = 0;
  for (std::size_t c = 0; c < 2; ++c)
    expect_row += gv[c] * (textbook_bilinear(map, c, 2.0, p.col) - textbook_bilinear(map, c, 1.0, p.col));
  EXPECT_NEAR(g.grad_row, expect_row, 1e-13);
}

TEST(DeformConv, ZeroOffsetsReduceToConvolution) {
  std::mt19937_64 rng(24);
  for (const auto& spec : {ops::ConvSpec::square(3, 4, 3, 1, 1), ops::ConvSpec::square(2, 3, 3, 2, 1),
                           ops::ConvSpec::square(2, 2, 1, 1, 0)}) {
    const auto x = random_normal(rng, {2, spec.in_channels, 7, 8});
    const auto w = random_normal(rng, spec.weight_dims());
    const auto b = random_normal(rng, {spec.out_channels});
    const Tensor<double> offsets({2, 2 * spec.taps(), spec.out_h(7), spec.out_w(8)});
    EXPECT_LT(max_rel_diff(deform::deform_conv2d_forward(x, w, b, offsets, spec), ops::conv2d_forward(x, w, b, spec),
                           1e-9),
              1e-12);
  }
}

TEST(DeformConv, UniformIntegerOffsetShiftsTheInput) {
  // Displacing every tap by (+1 row, -2 cols) equals convolving the input
  // shifted the opposite way, zero-filled.
  std::mt19937_64 rng(25);
  const auto spec = ops::ConvSpec::square(2, 3, 3, 1, 1);
  const auto x = random_normal(rng, {1, 2, 6, 7});
  const auto w = random_normal(rng, spec.weight_dims());
  const auto b = random_normal(rng, {3});
  Tensor<double> offsets({1, 2 * spec.taps(), 6, 7});
  for (std::size_t t = 0; t < spec.taps(); ++t)
    for (std::size_t i = 0; i < 42; ++i) {
      offsets[(2 * t) * 42 + i] = 1.0;
      offsets[(2 * t + 1) * 42 + i] = -2.0;
    }
  Tensor<double> shifted(x.dims());
  for (std::size_t c = 0; c < 2; ++c)
    for (long y = 0; y < 6; ++y)
      for (long xx = 0; xx < 7; ++xx) {
        const long sy = y + 1, sx = xx - 2;
        if (sy < 6 && sx >= 0) shifted.at(0, c, std::size_t(y), std::size_t(xx)) = x.at(0, c, std::size_t(sy), std::size_t(sx));
      }
  // Only outputs whose 3x3 window lies inside the image: elsewhere the conv
  // reads padding where the displaced taps may still land on real pixels.
  const auto got = deform::deform_conv2d_forward(x, w, b, offsets, spec);
  const auto want = ops::conv2d_forward(shifted, w, b, spec);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t y = 1; y < 5; ++y)
      for (std::size_t xx = 1; xx < 6; ++xx)
        EXPECT_NEAR(got.at(0, o, y, xx), want.at(0, o, y, xx), 1e-12) << o << " " << y << " " << xx;
}

TEST(DeformConv, OffsetPredictorKeepsGeometry) {
  const auto main = ops::ConvSpec::square(8, 16, 3, 2, 1);
  const auto os = deform::offset_spec(main);
  EXPECT_EQ(os.in_channels, 8u);
  EXPECT_EQ(os.out_channels, 18u);
  EXPECT_EQ(os.stride_h, 2u);
  EXPECT_EQ(os.pad_w, 1u);
  const Tensor<double> x({1, 8, 8, 8});
  const auto off = deform::offset_predictor_forward(x, Tensor<double>(os.weight_dims()), Tensor<double>({18}), main);
  EXPECT_EQ(off.dims(), (Shape{1, 18, 4, 4}));
}

TEST(DeformConv, RejectsOffsetFieldOfWrongShape) {
  const auto spec = ops::ConvSpec::square(1, 1, 3, 1, 1);
  EXPECT_THROW(deform::deform_conv2d_forward(Tensor<double>({1, 1, 4, 4}), Tensor<double>(spec.weight_dims()),
                                             Tensor<double>({1}), Tensor<double>({1, 9, 4, 4}), spec),
               Error);
}

TEST(DeformConv, BackwardWithZeroOffsetsMatchesConvolution) {
  std::mt19937_64 rng(26);
  const auto spec = ops::ConvSpec::square(2, 3, 3, 1, 1);
  const auto x = random_normal(rng, {1, 2, 5, 5});
  const auto w = random_normal(rng, spec.weight_dims());
  const Tensor<double> offsets({1, 18, 5, 5});
  const auto dy = random_normal(rng, {1, 3, 5, 5});
  const auto d = deform::deform_conv2d_backward(dy, x, w, offsets, spec);
  const auto c = ops::conv2d_backward(dy, x, w, spec);
  EXPECT_LT(max_rel_diff(d.input, c.input, 1e-9), 1e-12);
  EXPECT_LT(max_rel_diff(d.weights, c.weights, 1e-9), 1e-12);
  EXPECT_LT(max_rel_diff(d.bias, c.bias, 1e-9), 1e-12);
}

}  // namespace
}  // namespace dhs
