#include "facegen/image.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

const std::array<float, 256>& srgb_table() {
  static const std::array<float, 256> table = [] {
    std::array<float, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = static_cast<float>(c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4));
    }
    return t;
  }();
  return table;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) { throw IoError(std::string("png: ") + message); }
void png_warning_handler(png_structp, png_const_charp) {}

void write_png_rows(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
                    std::span<png_bytep> rows) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, file.get());
    png_set_compression_level(png, 1);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

// Reads any PNG, normalized to 8-bit RGB or 16-bit gray according to `want16`.
template <class Pixel>
Image<Pixel> read_png_generic(const std::filesystem::path& path, bool want16) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  Image<Pixel> image;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (want16) {
      if (color_type != PNG_COLOR_TYPE_GRAY) throw IoError(path.string() + ": expected a grayscale png");
      if (bit_depth < 16) png_set_expand_16(png);
      if (bit_depth == 16) png_set_swap(png);
    } else {
      if (bit_depth == 16) png_set_strip_16(png);
      if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
      }
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
      png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    image = Image<Pixel>(width, height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = reinterpret_cast<png_bytep>(image.row(y).data());
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace

float srgb8_to_linear(std::uint8_t v) { return srgb_table()[v]; }

std::uint8_t linear_to_srgb8(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  const double c = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(static_cast<double>(v), 1.0 / 2.4) - 0.055;
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
  static_assert(sizeof(Rgb8) == 3);
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y)
    rows[y] = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(image.row(y).data()));
  write_png_rows(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y)
    rows[y] = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(image.row(y).data()));
  write_png_rows(path, image.width(), image.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

Rgb8Image read_png(const std::filesystem::path& path) { return read_png_generic<Rgb8>(path, false); }

Image<std::uint16_t> read_png16(const std::filesystem::path& path) {
  return read_png_generic<std::uint16_t>(path, true);
}

}  // namespace facegen
