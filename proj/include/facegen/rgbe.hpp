#pragma once

// Radiance RGBE (.hdr) codec.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facegen/image.hpp"

namespace facegen {

struct Rgbe {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t e = 0;
  friend bool operator==(const Rgbe&, const Rgbe&) = default;
};

// value = mantissa / 256 * 2^(exponent - 128); exponent 0 is black.
Rgb rgbe_to_float(Rgbe pixel);
Rgbe float_to_rgbe(Rgb color);

RgbImage decode_hdr(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
RgbImage read_hdr(const std::filesystem::path& path);

// Writes adaptive-RLE scanlines when the width allows it, flat otherwise.
std::vector<std::uint8_t> encode_hdr(const RgbImage& image);
void write_hdr(const std::filesystem::path& path, const RgbImage& image);

}  // namespace facegen
