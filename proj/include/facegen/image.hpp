#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace facegen {

// Linear RGB triple.
struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;

  Rgb& operator+=(const Rgb& o) {
    r += o.r;
    g += o.g;
    b += o.b;
    return *this;
  }
  friend Rgb operator+(Rgb a, const Rgb& b) { return a += b; }
  friend Rgb operator*(Rgb a, float s) { return {a.r * s, a.g * s, a.b * s}; }
  friend Rgb operator*(float s, Rgb a) { return a * s; }
  friend Rgb operator*(const Rgb& a, const Rgb& b) { return {a.r * b.r, a.g * b.g, a.b * b.b}; }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

// Row-major image, origin top-left.
template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<Rgb>;
using Rgb8Image = Image<Rgb8>;

float srgb8_to_linear(std::uint8_t v);
// Clamp to [0,1], apply the sRGB transfer curve, round to nearest.
std::uint8_t linear_to_srgb8(float v);

void write_png(const std::filesystem::path& path, const Rgb8Image& image);
void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image);
Rgb8Image read_png(const std::filesystem::path& path);
Image<std::uint16_t> read_png16(const std::filesystem::path& path);

}  // namespace facegen
