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

#include "semod/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "semod/error.hpp"
#include "semod/fileio.hpp"

namespace semod {

RgbImage::RgbImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ParameterError("negative image size");
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

namespace {

class PpmReader {
 public:
  explicit PpmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1 << 20) throw InputError("PPM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw InputError("PPM header: expected a number");
    return value;
  }

  std::size_t pos_ = 0;
  std::span<const std::uint8_t> bytes_;
};

}  // namespace

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw InputError("not a binary PPM (P6) image");
  }
  PpmReader reader(bytes);
  reader.pos_ = 2;
  const long width = reader.number();
  const long height = reader.number();
  const long maxval = reader.number();
  if (width <= 0 || height <= 0) throw InputError("PPM has empty dimensions");
  if (maxval != 255) throw InputError("PPM maxval must be 255");
  if (reader.pos_ >= bytes.size() || !std::isspace(bytes[reader.pos_])) {
    throw InputError("PPM header not terminated");
  }
  ++reader.pos_;
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - reader.pos_ < need) throw InputError("PPM pixel data truncated");
  RgbImage image(static_cast<int>(width), static_cast<int>(height));
  std::copy_n(bytes.begin() + reader.pos_, need, image.bytes().begin());
  return image;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_ppm(image);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

PixelRect padded_rect(int image_width, int image_height, const Box& box,
                      double padding_fraction) {
  if (padding_fraction < 0.0 || !std::isfinite(padding_fraction)) {
    throw ParameterError("padding_fraction must be a finite value >= 0");
  }
  const double pad_x = box.width() * padding_fraction;
  const double pad_y = box.height() * padding_fraction;
  auto clamp = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  PixelRect r;
  r.x0 = clamp(std::floor(box.x_min - pad_x), image_width);
  r.y0 = clamp(std::floor(box.y_min - pad_y), image_height);
  r.x1 = clamp(std::ceil(box.x_max + pad_x), image_width);
  r.y1 = clamp(std::ceil(box.y_max + pad_y), image_height);
  return r;
}

RgbImage crop_patch(const RgbImage& image, const Box& box, double padding_fraction) {
  const PixelRect r = padded_rect(image.width(), image.height(), box, padding_fraction);
  if (r.width() <= 0 || r.height() <= 0) {
    throw InputError("crop box does not intersect the image");
  }
  RgbImage out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y) {
    const std::uint8_t* src = image.pixel(r.x0, r.y0 + y);
    std::copy_n(src, static_cast<std::size_t>(r.width()) * 3, out.pixel(0, y));
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (width <= 0 || height <= 0) throw ParameterError("resize target must be positive");
  if (image.empty()) throw InputError("cannot resize an empty image");
  if (image.width() == width && image.height() == height) return image;
  RgbImage out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      const std::uint8_t* p00 = image.pixel(x0, y0);
      const std::uint8_t* p01 = image.pixel(x1, y0);
      const std::uint8_t* p10 = image.pixel(x0, y1);
      const std::uint8_t* p11 = image.pixel(x1, y1);
      std::uint8_t* dst = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1.0 - wx) + p01[c] * wx;
        const double bottom = p10[c] * (1.0 - wx) + p11[c] * wx;
        dst[c] = static_cast<std::uint8_t>(std::lround(top * (1.0 - wy) + bottom * wy));
      }
    }
  }
  return out;
}

}  // namespace semod
