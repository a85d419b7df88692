// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "heatmap.hpp"

namespace dhs::heatmap {
namespace {

InstanceAnnotation box(int cls, double x0, double y0, double x1, double y1) { return {cls, {x0, y0, x1, y1}}; }

TEST(Sigma, FollowsDiagonalRuleWithFloorOfOneCell) {
  // 40x40 box: diag 56.57 px, R 4 -> 56.57 / 24 = 2.357 cells.
  EXPECT_NEAR(default_sigma(box(0, 0, 0, 40, 40), 4), std::sqrt(3200.0) / 24.0, 1e-15);
  EXPECT_EQ(default_sigma(box(0, 0, 0, 6, 8), 4), 1.0);  // diag 10 -> 0.417, clamped
}

TEST(CenterCell, FloorsTheMidpoint) {
  EXPECT_EQ(center_cell(box(0, 0, 0, 8, 8), 4), (GridPoint{1, 1}));
  EXPECT_EQ(center_cell(box(0, 1, 2, 8, 9), 4), (GridPoint{1, 1}));  // (5.5, 4.5)
  EXPECT_EQ(center_cell(box(0, 0, 0, 7, 7), 4), (GridPoint{0, 0}));  // 3.5
}

TEST(Splat, SigmaTwoAtSquaredDistanceEightIsExpMinusOne) {
  HeatmapTarget t(1, 16, 16, 4);
  gaussian_splat(t, box(0, 32, 32, 40, 40), 2.0);  // center cell (9, 9)
  EXPECT_EQ(t.map[9 * 16 + 9], 1.0);
  EXPECT_NEAR(t.map[11 * 16 + 11], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(t.map[11 * 16 + 11], 0.36788, 5e-6);
  ASSERT_EQ(t.positives.size(), 1u);
  EXPECT_EQ(t.positives[0], (Positive{0, {9, 9}}));
}

TEST(Splat, IsIdempotentAndMaxCombines) {
  HeatmapTarget t(2, 16, 16, 4);
  const auto a = box(1, 4, 4, 20, 20), b = box(1, 20, 12, 40, 30);
  gaussian_splat(t, a, 1.5);
  const auto once = t.map;
  gaussian_splat(t, a, 1.5);
  EXPECT_EQ(t.map, once);
  EXPECT_EQ(t.positives.size(), 1u);
  gaussian_splat(t, b, 2.0);
  const auto ca = center_cell(a, 4), cb = center_cell(b, 4);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      auto g = [&](GridPoint c, double s) {
        const double dy = double(y) - double(c.row), dx = double(x) - double(c.col);
        return std::exp(-(dx * dx + dy * dy) / (2 * s * s));
      };
      EXPECT_NEAR(t.map[256 + y * 16 + x], std::max(g(ca, 1.5), g(cb, 2.0)), 1e-15);
      EXPECT_EQ(t.map[y * 16 + x], 0.0);  // class 0 untouched
    }
  EXPECT_EQ(t.map[256 + ca.row * 16 + ca.col], 1.0);
  EXPECT_EQ(t.map[256 + cb.row * 16 + cb.col], 1.0);
}

TEST(Splat, DecaysMonotonicallyAlongRays) {
  HeatmapTarget t(1, 20, 20, 4);
  gaussian_splat(t, box(0, 36, 36, 44, 44), 2.5);  // center (10, 10)
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (!dy && !dx) continue;
      double prev = 1.0;
      for (int k = 1;; ++k) {
        const int y = 10 + k * dy, x = 10 + k * dx;
        if (y < 0 || x < 0 || y >= 20 || x >= 20) break;
        const double v = t.map[std::size_t(y * 20 + x)];
        EXPECT_LE(v, prev);
        prev = v;
      }
    }
}

TEST(Splat, RejectsBadSigmaAndClass) {
  HeatmapTarget t(1, 4, 4, 4);
  EXPECT_THROW(gaussian_splat(t, box(0, 0, 0, 4, 4), 0.0), Error);
  EXPECT_THROW(gaussian_splat(t, box(1, 0, 0, 4, 4), 1.0), Error);
}

TEST(BuildTarget, ShapeLawAndEmptyList) {
  const auto t = build_target({}, 64, 64, 4, 3);
  EXPECT_EQ(t.map.dims(), (Shape{3, 16, 16}));
  EXPECT_TRUE(t.positives.empty());
  for (double v : t.map.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(build_target({}, 62, 64, 4, 3), Error);
}

TEST(BuildTarget, RejectsBoxesOutsideTheImage) {
  EXPECT_THROW(build_target({box(0, 10, 10, 70, 20)}, 64, 64, 4, 1), Error);
  EXPECT_THROW(build_target({box(0, 10, 10, 10, 20)}, 64, 64, 4, 1), Error);
}

TEST(BuildTarget, CustomSigmaRuleIsUsed) {
  const auto t = build_target({box(0, 28, 28, 36, 36)}, 64, 64, 4, 1,
                              [](const InstanceAnnotation&, std::size_t) { return 3.0; });
  EXPECT_NEAR(t.map[8 * 16 + 11], std::exp(-9.0 / 18.0), 1e-15);
}

TEST(Peaks, SingleGaussianHasOnePeakAtCenter) {
  const auto t = build_target({box(2, 10, 30, 50, 60)}, 64, 64, 4, 3);
  const auto peaks = extract_peaks(t.map, 0.1, 10);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].class_id, 2);
  EXPECT_EQ(peaks[0].point, t.positives[0].point);
  EXPECT_EQ(peaks[0].score, 1.0);
}

TEST(Peaks, ZeroMapHasNone) { EXPECT_TRUE(extract_peaks(Tensor<double>({3, 8, 8}), 0.1, 10).empty()); }

TEST(Peaks, TwoGaussiansSixCellsApart) {
  HeatmapTarget t(1, 16, 16, 4);
  gaussian_splat(t, box(0, 16, 16, 24, 24), 1.0);  // (5, 5)
  gaussian_splat(t, box(0, 40, 16, 48, 24), 1.0);  // (5, 11)
  const auto peaks = extract_peaks(t.map, 0.1, 10);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_EQ(peaks[0].point, (GridPoint{5, 5}));  // equal scores: flat index order
  EXPECT_EQ(peaks[1].point, (GridPoint{5, 11}));
}

TEST(Peaks, SortedByScoreThenIndexAndTruncated) {
  Tensor<double> m({2, 4, 4});
  m[0 * 16 + 0] = 0.5;
  m[0 * 16 + 15] = 0.9;
  m[1 * 16 + 5] = 0.9;
  m[1 * 16 + 10] = 0.2;
  const auto all = extract_peaks(m, 0.3, 10);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].class_id, 0);
  EXPECT_EQ(all[0].point, (GridPoint{3, 3}));
  EXPECT_EQ(all[1].class_id, 1);
  EXPECT_EQ(all[2].score, 0.5);
  EXPECT_EQ(extract_peaks(m, 0.3, 2).size(), 2u);
}

TEST(Peaks, PlateauCellsAreAllPeaks) {
  // ">= every neighbor" makes each cell of a flat maximum a peak.
  Tensor<double> m({1, 3, 3});
  m[4] = 0.7;
  m[5] = 0.7;
  EXPECT_EQ(extract_peaks(m, 0.5, 10).size(), 2u);
}

TEST(Peaks, ScoresAreHeatmapValues) {
  std::mt19937_64 rng(31);
  Tensor<float> m({2, 8, 8});
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (float& v : m.data()) v = u(rng);
  const auto peaks = extract_peaks(m, 0.2, 100);
  ASSERT_FALSE(peaks.empty());
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const auto& p = peaks[i];
    EXPECT_EQ(p.score, double(m[(std::size_t(p.class_id) * 8 + p.point.row) * 8 + p.point.col]));
    if (i) EXPECT_LE(p.score, peaks[i - 1].score);
  }
}

}  // namespace
}  // namespace dhs::heatmap
