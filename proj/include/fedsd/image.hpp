#pragma once

// Small image helpers for the remote generator: base64 decoding and
// bilinear resampling of interleaved 8-bit images.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedsd {

/// Interleaved (HWC) 8-bit image.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
};

/// Standard alphabet, padding optional, whitespace ignored.
inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static constexpr auto table = [] {
    std::array<std::int8_t, 256> t{};
    t.fill(-1);
    const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(alphabet[i])] = static_cast<std::int8_t>(i);
    return t;
  }();
  std::vector<std::uint8_t> out;
  out.reserve(text.size() * 3 / 4);
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t pad = 0;
  for (char ch : text) {
    if (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t') continue;
    if (ch == '=') {
      ++pad;
      continue;
    }
    if (pad > 0) throw std::invalid_argument("base64: data after padding");
    const auto v = table[static_cast<unsigned char>(ch)];
    if (v < 0) throw std::invalid_argument("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  if (pad > 2 || bits >= 6) throw std::invalid_argument("base64: truncated input");
  return out;
}

/// Bilinear resampling with half-pixel centers: output pixel (i, j) samples
/// the source at ((i + 0.5) * sx - 0.5, (j + 0.5) * sy - 0.5), clamped to
/// the border. Values are kept as doubles in [0, 255].
inline std::vector<double> resize_bilinear(const Image& src, std::size_t width, std::size_t height) {
  if (src.width == 0 || src.height == 0 || width == 0 || height == 0)
    throw std::invalid_argument("resize_bilinear: empty image");
  const double sx = static_cast<double>(src.width) / static_cast<double>(width);
  const double sy = static_cast<double>(src.height) / static_cast<double>(height);
  const std::size_t C = src.channels;
  std::vector<double> out(width * height * C);

  auto axis = [](double pos, std::size_t n, std::size_t& lo, std::size_t& hi, double& frac) {
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    lo = static_cast<std::size_t>(std::floor(pos));
    hi = std::min(lo + 1, n - 1);
    frac = pos - static_cast<double>(lo);
  };

  for (std::size_t j = 0; j < height; ++j) {
    std::size_t y0, y1;
    double fy;
    axis((static_cast<double>(j) + 0.5) * sy - 0.5, src.height, y0, y1, fy);
    for (std::size_t i = 0; i < width; ++i) {
      std::size_t x0, x1;
      double fx;
      axis((static_cast<double>(i) + 0.5) * sx - 0.5, src.width, x0, x1, fx);
      for (std::size_t c = 0; c < C; ++c) {
        const double top = (1.0 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
        const double bottom = (1.0 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
        out[(j * width + i) * C + c] = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

}  // namespace fedsd
