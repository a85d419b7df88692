// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit tests: seeded random tensors and tolerant
// comparisons.

#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "tensor.hpp"

namespace dhs::testing {

template <typename T = double>
Tensor<T> random_normal(std::mt19937_64& rng, Shape dims, double scale = 1.0) {
  Tensor<T> t(std::move(dims));
  std::normal_distribution<double> dist(0.0, scale);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T = double>
Tensor<T> random_uniform(std::mt19937_64& rng, Shape dims, double lo, double hi) {
  Tensor<T> t(std::move(dims));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

// Largest elementwise |a - b| / max(|a|, |b|, floor).
template <typename T>
double max_rel_diff(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-12) {
  EXPECT_EQ(a.dims(), b.dims());
  double worst = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const double x = a[i], y = b[i];
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
  }
  return worst;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  EXPECT_EQ(a.dims(), b.dims());
  double worst = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return worst;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "dhsnet_" + tag;
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace dhs::testing
