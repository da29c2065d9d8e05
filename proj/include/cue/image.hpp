#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <png.h>

#include "cue/error.hpp"

namespace cue {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(int row, int col, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (row < 0 || row >= height || col < 0 || col >= width) return;
    auto* p = &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

namespace detail {

inline void write_png(const std::string& path, int w, int h, png_uint_32 format, const void* data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr))
    throw FormatError("png: cannot write " + path + ": " + img.message);
}

}  // namespace detail

inline void write_png(const std::string& path, const GrayImage& im) {
  detail::write_png(path, im.width, im.height, PNG_FORMAT_GRAY, im.pixels.data());
}

inline void write_png(const std::string& path, const RgbImage& im) {
  detail::write_png(path, im.width, im.height, PNG_FORMAT_RGB, im.pixels.data());
}

inline GrayImage read_png_gray(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) throw FormatError("png: cannot read " + path);
  img.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("png: cannot decode " + path);
  }
  return out;
}

}  // namespace cue
