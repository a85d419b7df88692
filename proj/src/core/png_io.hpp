// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dhs::png {

/// Decoded PNG, samples widened to 16 bits, interleaved row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 gray, 3 rgb (alpha is dropped, palettes expanded)
  int bit_depth = 8;         // 8 or 16
  std::vector<std::uint16_t> samples;

  std::uint16_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return samples[(y * width + x) * channels + c];
  }
};

Image read(const std::string& path);

// 8-bit writers; samples.size() must equal width * height * channels.
void write_rgb8(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb);
void write_gray8(const std::string& path, std::size_t width, std::size_t height,
                 const std::vector<std::uint8_t>& gray);
void write_gray16(const std::string& path, std::size_t width, std::size_t height,
                  const std::vector<std::uint16_t>& gray);

}  // namespace dhs::png
