// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "error.hpp"

namespace dhs::png {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  require(f != nullptr, ErrorKind::kData, "cannot open " + path);
  return f;
}

void write(const std::string& path, std::size_t width, std::size_t height, int color_type, int depth,
           const std::uint8_t* rows, std::size_t row_bytes) {
  File f = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::kInternal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::kData, "failed writing PNG " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  for (std::size_t y = 0; y < height; ++y) png_write_row(png, const_cast<png_bytep>(rows + y * row_bytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read(const std::string& path) {
  File f = open(path, "rb");
  unsigned char sig[8];
  require(std::fread(sig, 1, 8, f.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorKind::kData,
          path + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::kInternal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  // Declared before setjmp so a libpng longjmp never skips their lifetimes.
  Image img;
  std::vector<std::uint8_t> raw;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::kData, "corrupt PNG " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  img.bit_depth = depth;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.resize(row_bytes * img.height);
  for (std::size_t y = 0; y < img.height; ++y) png_read_row(png, raw.data() + y * row_bytes, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  require(img.channels == 1 || img.channels == 3, ErrorKind::kData, "unsupported PNG layout in " + path);
  img.samples.resize(img.width * img.height * img.channels);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t i = 0; i < img.width * img.channels; ++i) {
      const std::uint8_t* row = raw.data() + y * row_bytes;
      img.samples[y * img.width * img.channels + i] =
          depth == 16 ? static_cast<std::uint16_t>(row[2 * i] | (row[2 * i + 1] << 8)) : row[i];
    }
  return img;
}

void write_rgb8(const std::string& path, std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb) {
  require(rgb.size() == width * height * 3, ErrorKind::kShape, "rgb buffer size mismatch");
  write(path, width, height, PNG_COLOR_TYPE_RGB, 8, rgb.data(), width * 3);
}

void write_gray8(const std::string& path, std::size_t width, std::size_t height,
                 const std::vector<std::uint8_t>& gray) {
  require(gray.size() == width * height, ErrorKind::kShape, "gray buffer size mismatch");
  write(path, width, height, PNG_COLOR_TYPE_GRAY, 8, gray.data(), width);
}

void write_gray16(const std::string& path, std::size_t width, std::size_t height,
                  const std::vector<std::uint16_t>& gray) {
  require(gray.size() == width * height, ErrorKind::kShape, "gray buffer size mismatch");
  write(path, width, height, PNG_COLOR_TYPE_GRAY, 16, reinterpret_cast<const std::uint8_t*>(gray.data()), width * 2);
}

}  // namespace dhs::png
