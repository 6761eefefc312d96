#pragma once

#include <cstdint>
#include <vector>

namespace lrmr {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, std::uint8_t v) {
    pixels[static_cast<std::size_t>(y) * width + x] = v;
  }

  bool operator==(const GrayImage& o) const {
    return width == o.width && height == o.height && pixels == o.pixels;
  }
};

namespace png {

// Encodes as 8-bit grayscale PNG containing only IHDR/IDAT/IEND, with the
// image data in stored deflate blocks. No timestamps, no ancillary chunks:
// identical pixels give identical bytes on every platform.
std::vector<std::uint8_t> encode_gray(const GrayImage& image);

// Decodes bit depth 8/16, color types gray, gray+alpha, RGB, RGBA
// (non-interlaced); color is reduced to luma, alpha is dropped, 16-bit
// samples keep the high byte. Throws InputError on anything else or on a
// corrupt stream.
GrayImage decode_gray(const std::vector<std::uint8_t>& bytes);

// Raw zlib-stream inflate (RFC 1950/1951); exposed for tests.
std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& compressed);

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

}  // namespace png
}  // namespace lrmr
