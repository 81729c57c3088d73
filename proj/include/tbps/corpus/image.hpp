#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tbps/model/encoder.hpp"

namespace tbps::corpus {

/// 8-bit RGB raster, H x W x 3 row-major.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w * 3, 0) {}

  std::uint8_t* at(std::size_t y, std::size_t x) { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t y, std::size_t x) const { return &pixels[(y * width + x) * 3]; }
  bool operator==(const RgbImage&) const = default;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
/// Reads any 8/16-bit PNG and converts it to RGB8 (alpha dropped, grey expanded).
RgbImage read_png(const std::filesystem::path& path);

/// Maps [0, 255] to [-1, 1].
model::ImageData to_image_data(const RgbImage& image);
/// Nearest-neighbour resize, used to bring external images to the model size.
RgbImage resize_nearest(const RgbImage& image, std::size_t height, std::size_t width);

}  // namespace tbps::corpus
