// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "ops.hpp"
#include "test_util.hpp"
#include "text.hpp"

namespace dhs {
namespace {

using testing::max_abs_diff;
using testing::max_rel_diff;
using testing::random_normal;

// Direct six-loop convolution, zero padding.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                          const ops::ConvSpec& s) {
  const std::size_t n = x.dim(0), h = x.dim(2), wd = x.dim(3);
  const std::size_t oh = (h + 2 * s.pad_h - s.kernel_h) / s.stride_h + 1;
  const std::size_t ow = (wd + 2 * s.pad_w - s.kernel_w) / s.stride_w + 1;
  Tensor<double> y({n, s.out_channels, oh, ow});
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t co = 0; co < s.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < s.in_channels; ++ci)
            for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                const long iy = long(oy * s.stride_h + ky) - long(s.pad_h);
                const long ix = long(ox * s.stride_w + kx) - long(s.pad_w);
                if (iy < 0 || ix < 0 || iy >= long(h) || ix >= long(wd)) continue;
                acc += w.at(co, ci, ky, kx) * x.at(in, ci, std::size_t(iy), std::size_t(ix));
              }
          y.at(in, co, oy, ox) = acc;
        }
  return y;
}

TEST(Conv2d, MatchesDirectLoopsAcrossGeometries) {
  std::mt19937_64 rng(11);
  struct Geometry {
    std::size_t cin, cout, k, stride, pad, h, w;
  };
  for (const Geometry g : {Geometry{1, 1, 3, 1, 1, 4, 4}, Geometry{3, 5, 3, 1, 1, 7, 6}, Geometry{2, 4, 3, 2, 1, 9, 8},
                           Geometry{4, 3, 1, 1, 0, 5, 5}, Geometry{2, 2, 5, 1, 2, 6, 7}, Geometry{3, 2, 3, 1, 0, 5, 5}}) {
    const auto spec = ops::ConvSpec::square(g.cin, g.cout, g.k, g.stride, g.pad);
    const auto x = random_normal(rng, {2, g.cin, g.h, g.w});
    const auto w = random_normal(rng, spec.weight_dims());
    const auto b = random_normal(rng, {g.cout});
    EXPECT_LT(max_rel_diff(ops::conv2d_forward(x, w, b, spec), naive_conv(x, w, b, spec), 1e-9), 1e-12);
  }
}

TEST(Conv2d, OutputShapeLaw) {
  const auto spec = ops::ConvSpec::square(3, 8, 3, 2, 1);
  EXPECT_EQ(spec.out_h(64), 32u);
  EXPECT_EQ(spec.out_w(63), 32u);
  EXPECT_EQ(ops::ConvSpec::square(1, 1, 3, 1, 0).out_h(3), 1u);
  EXPECT_THROW(ops::ConvSpec::square(1, 1, 3, 1, 0).out_h(2), Error);
}

TEST(Conv2d, IsLinearInTheInputWithZeroBias) {
  std::mt19937_64 rng(12);
  const auto spec = ops::ConvSpec::square(3, 4, 3, 1, 1);
  const auto w = random_normal(rng, spec.weight_dims());
  const Tensor<double> zero({4});
  const auto x1 = random_normal(rng, {1, 3, 6, 6});
  const auto x2 = random_normal(rng, {1, 3, 6, 6});
  const double a = 1.7, c = -0.6;
  Tensor<double> mix(x1.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1[i] + c * x2[i];
  const auto y1 = ops::conv2d_forward(x1, w, zero, spec);
  const auto y2 = ops::conv2d_forward(x2, w, zero, spec);
  Tensor<double> expect(y1.dims());
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = a * y1[i] + c * y2[i];
  EXPECT_LT(max_rel_diff(ops::conv2d_forward(mix, w, zero, spec), expect, 1e-9), 1e-6);
}

TEST(Conv2d, RejectsMismatchedWeights) {
  const auto spec = ops::ConvSpec::square(3, 4, 3, 1, 1);
  const Tensor<double> x({1, 2, 5, 5});
  try {
    ops::conv2d_forward(x, Tensor<double>(spec.weight_dims()), Tensor<double>({4}), spec);
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Conv2d, IsBitDeterministic) {
  std::mt19937_64 rng(13);
  const auto spec = ops::ConvSpec::square(4, 6, 3, 1, 1);
  const auto x = random_normal<float>(rng, {2, 4, 16, 16});
  const auto w = random_normal<float>(rng, spec.weight_dims());
  const auto b = random_normal<float>(rng, {6});
  EXPECT_TRUE(ops::conv2d_forward(x, w, b, spec) == ops::conv2d_forward(x, w, b, spec));
}

TEST(Conv2d, BackwardIsTheAdjointOfForward) {
  // <dy, conv(x)> = <conv_backward(dy).input, x> + <.weights, w> + <.bias, b> for a bilinear map.
  std::mt19937_64 rng(14);
  const auto spec = ops::ConvSpec::square(2, 3, 3, 2, 1);
  const auto x = random_normal(rng, {2, 2, 7, 6});
  const auto w = random_normal(rng, spec.weight_dims());
  const Tensor<double> zero({3});
  const auto y = ops::conv2d_forward(x, w, zero, spec);
  const auto dy = random_normal(rng, y.dims());
  const auto g = ops::conv2d_backward(dy, x, w, spec);
  double lhs = 0, rx = 0, rw = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += dy[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rx += g.input[i] * x[i];
  for (std::size_t i = 0; i < w.size(); ++i) rw += g.weights[i] * w[i];
  EXPECT_NEAR(rx / lhs, 1.0, 1e-12);
  EXPECT_NEAR(rw / lhs, 1.0, 1e-12);
  double bias_sum = 0;
  for (double v : dy.data()) bias_sum += v;
  double gb = 0;
  for (double v : g.bias.data()) gb += v;
  EXPECT_NEAR(gb, bias_sum, 1e-9);
}

TEST(TransposedConv, MatchesScatterDefinition) {
  std::mt19937_64 rng(15);
  const auto x = random_normal(rng, {2, 3, 4, 5});
  const auto w = random_normal(rng, {3, 2, 2, 2});
  const auto b = random_normal(rng, {2});
  Tensor<double> expect({2, 2, 8, 10});
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t co = 0; co < 2; ++co)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t xx = 0; xx < 10; ++xx) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < 3; ++ci) acc += x.at(n, ci, y / 2, xx / 2) * w.at(ci, co, y % 2, xx % 2);
          expect.at(n, co, y, xx) = acc;
        }
  EXPECT_LT(max_rel_diff(ops::transposed_conv2x2_forward(x, w, b), expect, 1e-9), 1e-12);
}

TEST(MaxPool, PicksWindowMaximaAndBreaksTiesToFirst) {
  const Tensor<double> x({1, 1, 2, 4}, {1, 5, 7, 7, 3, 2, 7, 1});
  const auto r = ops::maxpool2x2_forward(x);
  ASSERT_EQ(r.output.dims(), (Shape{1, 1, 1, 2}));
  EXPECT_EQ(r.output[0], 5);
  EXPECT_EQ(r.output[1], 7);
  EXPECT_EQ(r.argmax[0], 1u);
  EXPECT_EQ(r.argmax[1], 2u);  // 7 appears at flat 2, 3 and 6
  const Tensor<double> dy({1, 1, 1, 2}, {0.5, -2});
  const auto dx = ops::maxpool2x2_backward(dy, r.argmax, x.dims());
  EXPECT_EQ(dx, (Tensor<double>({1, 1, 2, 4}, {0, 0.5, -2, 0, 0, 0, 0, 0})));
}

TEST(MaxPool, RejectsOddExtents) { EXPECT_THROW(ops::maxpool2x2_forward(Tensor<double>({1, 1, 3, 4})), Error); }

TEST(Relu, ZeroHasZeroDerivative) {
  const Tensor<double> x({1, 1, 1, 3}, {-1, 0, 2});
  EXPECT_EQ(ops::relu_forward(x), (Tensor<double>({1, 1, 1, 3}, {0, 0, 2})));
  const Tensor<double> dy({1, 1, 1, 3}, {1, 1, 1});
  EXPECT_EQ(ops::relu_backward(dy, x), (Tensor<double>({1, 1, 1, 3}, {0, 0, 1})));
}

TEST(Sigmoid, ValuesAndDerivative) {
  const Tensor<double> x({3}, {0.0, 2.0, -40.0});
  const auto y = ops::sigmoid_forward(x);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_GT(y[2], 0.0);
  const auto g = ops::sigmoid_backward(Tensor<double>({3}, {1, 1, 1}), y);
  EXPECT_DOUBLE_EQ(g[0], 0.25);
}

TEST(Concat, StacksChannelsAndSplitsBack) {
  std::mt19937_64 rng(16);
  const auto a = random_normal(rng, {2, 3, 2, 2});
  const auto b = random_normal(rng, {2, 1, 2, 2});
  const auto c = ops::concat_channels(a, b);
  ASSERT_EQ(c.dims(), (Shape{2, 4, 2, 2}));
  EXPECT_EQ(c.at(1, 3, 1, 0), b.at(1, 0, 1, 0));
  EXPECT_EQ(c.at(1, 2, 0, 1), a.at(1, 2, 0, 1));
  const auto [pa, pb] = ops::split_channels(c, 3);
  EXPECT_EQ(pa, a);
  EXPECT_EQ(pb, b);
}

TEST(SoftmaxCe, MatchesLogSumExpAndSkipsIgnore) {
  std::mt19937_64 rng(17);
  const auto logits = random_normal(rng, {2, 4, 3, 3}, 3.0);
  ops::LabelMap labels({2, 3, 3});
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int32_t>(i % 5 == 4 ? 255 : i % 4);
  double sum = 0;
  std::size_t counted = 0;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 3; ++x) {
        const auto label = labels[(n * 3 + y) * 3 + x];
        if (label == 255) continue;
        double z = 0;
        for (std::size_t c = 0; c < 4; ++c) z += std::exp(logits.at(n, c, y, x));
        sum += std::log(z) - logits.at(n, std::size_t(label), y, x);
        ++counted;
      }
  const auto r = ops::softmax_ce(logits, labels);
  EXPECT_EQ(r.counted, counted);
  EXPECT_NEAR(r.loss, sum / double(counted), 1e-12);
  EXPECT_NEAR(ops::softmax_ce_forward(logits, labels), r.loss, 1e-15);
  // Ignored pixels carry no gradient; each counted pixel's gradient sums to 0.
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t p = 0; p < 9; ++p) {
      double s = 0, a = 0;
      for (std::size_t c = 0; c < 4; ++c) {
        s += r.grad_logits.at(n, c, p / 3, p % 3);
        a += std::abs(r.grad_logits.at(n, c, p / 3, p % 3));
      }
      EXPECT_NEAR(s, 0.0, 1e-15);
      if (labels[n * 9 + p] == 255) EXPECT_EQ(a, 0.0);
    }
}

TEST(SoftmaxCe, AllIgnoredContributesNothing) {
  ops::LabelMap labels({1, 1, 1}, std::int32_t{255});
  const auto r = ops::softmax_ce(Tensor<double>({1, 2, 1, 1}, {3.0, -1.0}), labels);
  EXPECT_EQ(r.counted, 0u);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad_logits, Tensor<double>({1, 2, 1, 1}));
}

TEST(SoftmaxCe, RejectsOutOfRangeLabels) {
  ops::LabelMap labels({1, 1, 1}, std::int32_t{7});
  EXPECT_THROW(ops::softmax_ce(Tensor<double>({1, 2, 1, 1}), labels), Error);
}

TEST(Argmax, TiesGoToLowestClass) {
  const Tensor<double> logits({1, 3, 1, 2}, {1, 0, 1, 5, 0, 5});
  const auto m = ops::argmax_channels(logits);
  EXPECT_EQ(m[0], 0);
  EXPECT_EQ(m[1], 1);
}

TEST(Gemm, MatchesHandProduct) {
  const double a[] = {1, 2, 3, 4, 5, 6};  // 2x3
  const double b[] = {1, 0, 2, 1, 0, 1};  // 3x2
  double c[4] = {10, 10, 10, 10};
  ops::gemm(false, false, 2, 2, 3, a, b, c, false);
  EXPECT_EQ(c[0], 5);
  EXPECT_EQ(c[1], 5);
  EXPECT_EQ(c[2], 14);
  EXPECT_EQ(c[3], 11);
  ops::gemm(false, false, 2, 2, 3, a, b, c, true);
  EXPECT_EQ(c[3], 22);
}

TEST(Tensor, RejectsBufferOfWrongLength) {
  EXPECT_THROW(Tensor<double>(Shape{2, 2}, std::vector<double>(3)), Error);
  Tensor<double> t({2, 3});
  EXPECT_THROW(t.reshape({4, 2}), Error);
  t.reshape({3, 2});
  EXPECT_EQ(t.dims(), (Shape{3, 2}));
}

TEST(Text, ParsesKeyValuesAndRejectsJunk) {
  const auto kv = text::parse_key_values("# c\n a = 1 \n\nb=two # tail\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "a");
  EXPECT_EQ(kv[1].second, "two");
  EXPECT_THROW(text::parse_key_values("no equals sign"), Error);
  EXPECT_EQ(text::parse_uint("42", "x"), 42u);
  EXPECT_THROW(text::parse_uint("-1", "x"), Error);
  EXPECT_THROW(text::parse_double("1.5x", "x"), Error);
  EXPECT_TRUE(text::parse_bool("true", "x"));
  EXPECT_THROW(text::parse_bool("maybe", "x"), Error);
}

}  // namespace
}  // namespace dhs
