#include "tbps/corpus/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "tbps/core/errors.hpp"

namespace tbps::corpus {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) { throw DataError(msg); }
void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.pixels.size() != image.height * image.width * 3 || image.height == 0)
    throw DataError("write_png: malformed image buffer for " + path.string());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                            png_warning_handler);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y)
      png_write_row(png, const_cast<png_bytep>(image.at(y, 0)));
    png_write_end(png, nullptr);
  } catch (const DataError& e) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": " + e.what());
  }
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open image " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError(path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  png_infop info = png_create_info_struct(png);
  RgbImage out;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_tRNS_to_alpha(png);
      png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    out = RgbImage(png_get_image_height(png, info), png_get_image_width(png, info));
    if (png_get_rowbytes(png, info) != out.width * 3)
      throw DataError("unsupported pixel layout");
    for (std::size_t y = 0; y < out.height; ++y) png_read_row(png, out.at(y, 0), nullptr);
    png_read_end(png, nullptr);
  } catch (const DataError& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + ": " + e.what());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

model::ImageData to_image_data(const RgbImage& image) {
  model::ImageData d{image.height, image.width, 3, std::vector<double>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    d.pixels[i] = static_cast<double>(image.pixels[i]) / 127.5 - 1.0;
  return d;
}

RgbImage resize_nearest(const RgbImage& image, std::size_t height, std::size_t width) {
  if (image.height == height && image.width == width) return image;
  RgbImage out(height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sy = y * image.height / height;
      const std::size_t sx = x * image.width / width;
      std::copy_n(image.at(sy, sx), 3, out.at(y, x));
    }
  return out;
}

}  // namespace tbps::corpus
