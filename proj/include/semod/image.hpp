/* Copyright 2026 The Semod Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "semod/geometry.hpp"

namespace semod {

// 8-bit interleaved RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::uint8_t* pixel(int x, int y) { return &data_[index(x, y)]; }
  const std::uint8_t* pixel(int x, int y) const { return &data_[index(x, y)]; }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::uint8_t* p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  Box bounds() const {
    return Box{0.0, 0.0, static_cast<double>(width_), static_cast<double>(height_)};
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Binary PPM (P6, maxval 255). Throws InputError on anything undecodable.
RgbImage read_ppm(const std::filesystem::path& path);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

// Integer pixel rectangle [x0, x1) x [y0, y1) covering `box` expanded by
// `padding_fraction` of its width/height on every side, clamped to the image.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};
PixelRect padded_rect(int image_width, int image_height, const Box& box,
                      double padding_fraction);

// Throws InputError when the padded box does not intersect the image.
RgbImage crop_patch(const RgbImage& image, const Box& box, double padding_fraction);

// Bilinear resampling with pixel-center alignment. Same-size input is
// returned unchanged.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);

}  // namespace semod
