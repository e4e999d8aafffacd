#include "facegen/rgbe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t next(const char* what) {
    if (at_end()) fail(what);
    return bytes_[pos_++];
  }

  std::uint8_t peek(std::size_t offset) const { return bytes_[pos_ + offset]; }

  // Header lines end at '\n'; returns false at end of input.
  bool line(std::string& out) {
    if (at_end()) return false;
    out.clear();
    while (!at_end() && bytes_[pos_] != '\n') out.push_back(static_cast<char>(bytes_[pos_++]));
    if (!at_end()) ++pos_;
    ++line_;
    return true;
  }

  int line_number() const { return line_; }

  [[noreturn]] void fail(const char* what) const {
    throw ParseError(source_, 0, std::string(what) + " at byte " + std::to_string(pos_));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

void read_flat_scanline(ByteReader& in, std::vector<Rgbe>& row, std::size_t start) {
  int shift = 0;
  for (std::size_t x = start; x < row.size();) {
    Rgbe p;
    p.r = in.next("truncated scanline");
    p.g = in.next("truncated scanline");
    p.b = in.next("truncated scanline");
    p.e = in.next("truncated scanline");
    if (p.r == 1 && p.g == 1 && p.b == 1) {
      // Old-style run: repeat the previous pixel.
      if (x == 0) in.fail("run without preceding pixel");
      const std::size_t count = static_cast<std::size_t>(p.e) << shift;
      if (x + count > row.size()) in.fail("run exceeds scanline");
      for (std::size_t i = 0; i < count; ++i, ++x) row[x] = row[x - 1];
      shift += 8;
    } else {
      row[x++] = p;
      shift = 0;
    }
  }
}

void read_rle_scanline(ByteReader& in, std::vector<Rgbe>& row) {
  const std::size_t width = row.size();
  for (int channel = 0; channel < 4; ++channel) {
    auto component = [channel](Rgbe& p) -> std::uint8_t& {
      switch (channel) {
        case 0: return p.r;
        case 1: return p.g;
        case 2: return p.b;
        default: return p.e;
      }
    };
    std::size_t x = 0;
    while (x < width) {
      std::uint8_t count = in.next("truncated scanline");
      if (count > 128) {
        count -= 128;
        if (x + count > width) in.fail("bad scanline run length");
        const std::uint8_t value = in.next("truncated scanline");
        for (int i = 0; i < count; ++i) component(row[x++]) = value;
      } else {
        if (count == 0 || x + count > width) in.fail("bad scanline literal length");
        for (int i = 0; i < count; ++i) component(row[x++]) = in.next("truncated scanline");
      }
    }
  }
}

void append_rle_channel(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& data) {
  constexpr std::size_t kMinRun = 4;
  std::size_t cur = 0;
  const std::size_t n = data.size();
  while (cur < n) {
    // Find the next run of at least kMinRun equal bytes.
    std::size_t beg_run = cur;
    std::size_t run_count = 0;
    while (run_count < kMinRun && beg_run < n) {
      beg_run += run_count;
      run_count = 1;
      while (beg_run + run_count < n && run_count < 127 && data[beg_run] == data[beg_run + run_count]) ++run_count;
    }
    if (run_count < kMinRun) beg_run = n;
    while (cur < beg_run) {
      const std::size_t literal = std::min<std::size_t>(128, beg_run - cur);
      out.push_back(static_cast<std::uint8_t>(literal));
      out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(cur),
                 data.begin() + static_cast<std::ptrdiff_t>(cur + literal));
      cur += literal;
    }
    if (run_count >= kMinRun) {
      out.push_back(static_cast<std::uint8_t>(128 + run_count));
      out.push_back(data[beg_run]);
      cur += run_count;
    }
  }
}

}  // namespace

Rgb rgbe_to_float(Rgbe pixel) {
  if (pixel.e == 0) return {};
  const float f = std::ldexp(1.0f, static_cast<int>(pixel.e) - (128 + 8));
  return {pixel.r * f, pixel.g * f, pixel.b * f};
}

Rgbe float_to_rgbe(Rgb color) {
  const double v = std::max({static_cast<double>(color.r), static_cast<double>(color.g), static_cast<double>(color.b)});
  if (!(v >= 1e-32)) return {};
  int exponent = 0;
  const double mantissa = std::frexp(v, &exponent);
  if (exponent + 128 > 255) return {255, 255, 255, 255};
  if (exponent + 128 < 1) return {};
  const double scale = mantissa * 256.0 / v;
  auto quantize = [scale](float c) { return static_cast<std::uint8_t>(std::clamp(c * scale, 0.0, 255.0)); };
  return {quantize(color.r), quantize(color.g), quantize(color.b), static_cast<std::uint8_t>(exponent + 128)};
}

RgbImage decode_hdr(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader in(bytes, source);
  std::string line;
  if (!in.line(line) || !(line.starts_with("#?RADIANCE") || line.starts_with("#?RGBE")))
    throw ParseError(source, 1, "bad magic, expected #?RADIANCE");
  for (;;) {
    if (!in.line(line)) throw ParseError(source, in.line_number(), "unterminated header");
    if (line.empty()) break;
    if (line.starts_with("FORMAT=") && line != "FORMAT=32-bit_rle_rgbe")
      throw ParseError(source, in.line_number(), "unsupported pixel format " + line.substr(7));
  }
  if (!in.line(line)) throw ParseError(source, in.line_number(), "missing resolution line");
  std::istringstream res(line);
  std::string ylabel, xlabel;
  long height = 0;
  long width = 0;
  if (!(res >> ylabel >> height >> xlabel >> width) || ylabel != "-Y" || xlabel != "+X")
    throw ParseError(source, in.line_number(), "unsupported resolution line '" + line + "'");
  if (width <= 0 || height <= 0 || width > 1 << 16 || height > 1 << 16)
    throw ParseError(source, in.line_number(), "bad image dimensions");

  RgbImage image(static_cast<int>(width), static_cast<int>(height));
  std::vector<Rgbe> row(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    const bool rle = width >= 8 && width < 0x8000 && in.remaining() >= 4 && in.peek(0) == 2 && in.peek(1) == 2 &&
                     (in.peek(2) & 0x80) == 0;
    if (rle) {
      const long encoded_width = (static_cast<long>(in.peek(2)) << 8) | in.peek(3);
      if (encoded_width != width) in.fail("scanline width mismatch");
      for (int i = 0; i < 4; ++i) in.next("truncated scanline");
      read_rle_scanline(in, row);
    } else {
      read_flat_scanline(in, row, 0);
    }
    for (int x = 0; x < width; ++x) image(x, y) = rgbe_to_float(row[x]);
  }
  return image;
}

RgbImage read_hdr(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_hdr(bytes, path.string());
}

std::vector<std::uint8_t> encode_hdr(const RgbImage& image) {
  const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(image.height()) + " +X " +
                             std::to_string(image.width()) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int width = image.width();
  const bool rle = width >= 8 && width < 0x8000;
  std::vector<std::uint8_t> channel(static_cast<std::size_t>(width));
  std::vector<Rgbe> row(static_cast<std::size_t>(width));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < width; ++x) row[x] = float_to_rgbe(image(x, y));
    if (!rle) {
      for (const Rgbe& p : row) out.insert(out.end(), {p.r, p.g, p.b, p.e});
      continue;
    }
    out.insert(out.end(), {2, 2, static_cast<std::uint8_t>(width >> 8), static_cast<std::uint8_t>(width & 0xff)});
    for (int c = 0; c < 4; ++c) {
      for (int x = 0; x < width; ++x) {
        const Rgbe& p = row[x];
        channel[x] = c == 0 ? p.r : c == 1 ? p.g : c == 2 ? p.b : p.e;
      }
      append_rle_channel(out, channel);
    }
  }
  return out;
}

void write_hdr(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_hdr(image);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

}  // namespace facegen
