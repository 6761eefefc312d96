#include "lrmr/png.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstring>
#include <string>

#include "lrmr/errors.hpp"

namespace lrmr::png {
namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t adler32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_u32_be(out, std::uint32_t(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32_be(out, crc32(out.data() + crc_start, out.size() - crc_start));
}

// ---- inflate ------------------------------------------------------------

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

  std::uint32_t bits(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) {
      if (bit_pos_ == 0) {
        if (byte_pos_ >= len_) throw InputError("deflate stream truncated");
        cur_ = data_[byte_pos_++];
      }
      v |= std::uint32_t((cur_ >> bit_pos_) & 1) << i;
      bit_pos_ = (bit_pos_ + 1) & 7;
    }
    return v;
  }

  void align_byte() { bit_pos_ = 0; }

  std::uint8_t byte() {
    if (byte_pos_ >= len_) throw InputError("deflate stream truncated");
    return data_[byte_pos_++];
  }

 private:
  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t byte_pos_ = 0;
  int bit_pos_ = 0;
  std::uint8_t cur_ = 0;
};

// Canonical Huffman decoder over code lengths (puff-style counts walk).
struct Huffman {
  std::vector<int> count;   // count[len] = number of codes of that length
  std::vector<int> symbol;  // symbols ordered by (length, symbol)

  explicit Huffman(const std::vector<int>& lengths) {
    count.assign(16, 0);
    for (int l : lengths) count[l]++;
    count[0] = 0;
    std::vector<int> offsets(16, 0);
    for (int l = 1; l < 16; ++l) offsets[l] = offsets[l - 1] + count[l - 1];
    symbol.assign(lengths.size(), 0);
    for (std::size_t s = 0; s < lengths.size(); ++s)
      if (lengths[s] != 0) symbol[offsets[lengths[s]]++] = int(s);
  }

  int decode(BitReader& in) const {
    int code = 0, first = 0, index = 0;
    for (int len = 1; len < 16; ++len) {
      code |= int(in.bits(1));
      const int n = count[len];
      if (code - first < n) return symbol[index + (code - first)];
      index += n;
      first = (first + n) << 1;
      code <<= 1;
    }
    throw InputError("invalid huffman code");
  }
};

const Huffman& fixed_literal_table() {
  static const Huffman table = [] {
    std::vector<int> lengths(288);
    for (int i = 0; i < 144; ++i) lengths[i] = 8;
    for (int i = 144; i < 256; ++i) lengths[i] = 9;
    for (int i = 256; i < 280; ++i) lengths[i] = 7;
    for (int i = 280; i < 288; ++i) lengths[i] = 8;
    return Huffman(lengths);
  }();
  return table;
}

const Huffman& fixed_distance_table() {
  static const Huffman table = Huffman(std::vector<int>(30, 5));
  return table;
}

constexpr int kLengthBase[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,
                                 15, 17, 19, 23, 27, 31, 35, 43, 51,  59,
                                 67, 83, 99, 115, 131, 163, 195, 227, 258};
constexpr int kLengthExtra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                  2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
constexpr int kDistBase[30] = {1,    2,    3,    4,    5,    7,     9,     13,
                               17,   25,   33,   49,   65,   97,    129,   193,
                               257,  385,  513,  769,  1025, 1537,  2049,  3073,
                               4097, 6145, 8193, 12289, 16385, 24577};
constexpr int kDistExtra[30] = {0, 0, 0, 0, 1, 1, 2, 2,  3,  3,  4,  4,  5,  5, 6,
                                6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

void inflate_block(BitReader& in, const Huffman& lit, const Huffman& dist,
                   std::vector<std::uint8_t>& out) {
  for (;;) {
    const int sym = lit.decode(in);
    if (sym < 256) {
      out.push_back(std::uint8_t(sym));
    } else if (sym == 256) {
      return;
    } else {
      const int li = sym - 257;
      if (li >= 29) throw InputError("invalid length symbol");
      const int length = kLengthBase[li] + int(in.bits(kLengthExtra[li]));
      const int di = dist.decode(in);
      if (di >= 30) throw InputError("invalid distance symbol");
      const std::size_t distance = std::size_t(kDistBase[di]) + in.bits(kDistExtra[di]);
      if (distance > out.size()) throw InputError("distance past window start");
      std::size_t from = out.size() - distance;
      for (int i = 0; i < length; ++i) out.push_back(out[from + i]);
    }
  }
}

void inflate_dynamic(BitReader& in, std::vector<std::uint8_t>& out) {
  const int hlit = int(in.bits(5)) + 257;
  const int hdist = int(in.bits(5)) + 1;
  const int hclen = int(in.bits(4)) + 4;
  static const int order[19] = {16, 17, 18, 0, 8,  7, 9,  6, 10, 5,
                                11, 4,  12, 3, 13, 2, 14, 1, 15};
  std::vector<int> cl_lengths(19, 0);
  for (int i = 0; i < hclen; ++i) cl_lengths[order[i]] = int(in.bits(3));
  const Huffman cl(cl_lengths);

  std::vector<int> lengths;
  lengths.reserve(hlit + hdist);
  while (int(lengths.size()) < hlit + hdist) {
    const int sym = cl.decode(in);
    if (sym < 16) {
      lengths.push_back(sym);
    } else if (sym == 16) {
      if (lengths.empty()) throw InputError("repeat with no previous length");
      const int prev = lengths.back();
      int rep = 3 + int(in.bits(2));
      while (rep--) lengths.push_back(prev);
    } else if (sym == 17) {
      int rep = 3 + int(in.bits(3));
      while (rep--) lengths.push_back(0);
    } else {
      int rep = 11 + int(in.bits(7));
      while (rep--) lengths.push_back(0);
    }
  }
  if (int(lengths.size()) != hlit + hdist) throw InputError("code length overflow");

  const Huffman lit(std::vector<int>(lengths.begin(), lengths.begin() + hlit));
  const Huffman dist(std::vector<int>(lengths.begin() + hlit, lengths.end()));
  inflate_block(in, lit, dist, out);
}

std::vector<std::uint8_t> inflate_raw(BitReader& in) {
  std::vector<std::uint8_t> out;
  for (;;) {
    const bool final_block = in.bits(1) != 0;
    const int type = int(in.bits(2));
    if (type == 0) {
      in.align_byte();
      const std::uint32_t len = std::uint32_t(in.byte()) | (std::uint32_t(in.byte()) << 8);
      const std::uint32_t nlen = std::uint32_t(in.byte()) | (std::uint32_t(in.byte()) << 8);
      if ((len ^ 0xffff) != nlen) throw InputError("stored block length mismatch");
      for (std::uint32_t i = 0; i < len; ++i) out.push_back(in.byte());
    } else if (type == 1) {
      inflate_block(in, fixed_literal_table(), fixed_distance_table(), out);
    } else if (type == 2) {
      inflate_dynamic(in, out);
    } else {
      throw InputError("reserved deflate block type");
    }
    if (final_block) break;
  }
  return out;
}

// ---- scanline filters ---------------------------------------------------

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

void unfilter(std::vector<std::uint8_t>& raw, int height, int stride, int bpp) {
  // raw holds height rows of (1 filter byte + stride data bytes).
  std::vector<std::uint8_t> prev(stride, 0);
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + std::size_t(y) * (stride + 1);
    const std::uint8_t filter = row[0];
    std::uint8_t* cur = row + 1;
    switch (filter) {
      case 0:
        break;
      case 1:
        for (int x = bpp; x < stride; ++x) cur[x] = std::uint8_t(cur[x] + cur[x - bpp]);
        break;
      case 2:
        for (int x = 0; x < stride; ++x) cur[x] = std::uint8_t(cur[x] + prev[x]);
        break;
      case 3:
        for (int x = 0; x < stride; ++x) {
          const int left = x >= bpp ? cur[x - bpp] : 0;
          cur[x] = std::uint8_t(cur[x] + ((left + prev[x]) >> 1));
        }
        break;
      case 4:
        for (int x = 0; x < stride; ++x) {
          const int left = x >= bpp ? cur[x - bpp] : 0;
          const int upleft = x >= bpp ? prev[x - bpp] : 0;
          cur[x] = std::uint8_t(cur[x] + paeth(left, prev[x], upleft));
        }
        break;
      default:
        throw InputError("unknown scanline filter " + std::to_string(filter));
    }
    std::memcpy(prev.data(), cur, std::size_t(stride));
  }
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  std::uint32_t c = 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& compressed) {
  if (compressed.size() < 6) throw InputError("zlib stream too short");
  const int cm = compressed[0] & 0x0f;
  if (cm != 8) throw InputError("unsupported zlib compression method");
  if (((compressed[0] << 8) | compressed[1]) % 31 != 0)
    throw InputError("bad zlib header check");
  if (compressed[1] & 0x20) throw InputError("preset dictionary not supported");

  BitReader in(compressed.data() + 2, compressed.size() - 2);
  std::vector<std::uint8_t> out = inflate_raw(in);

  const std::size_t n = compressed.size();
  const std::uint32_t expected = read_u32_be(compressed.data() + n - 4);
  if (adler32(out.data(), out.size()) != expected)
    throw InputError("zlib checksum mismatch");
  return out;
}

std::vector<std::uint8_t> encode_gray(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0)
    throw ValidationError("cannot encode empty image");

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);

  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, std::uint32_t(image.width));
  put_u32_be(ihdr, std::uint32_t(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);

  // Filter 0 on every scanline, then a zlib stream of stored blocks.
  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(image.height) * (image.width + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = image.pixels.data() + std::size_t(y) * image.width;
    raw.insert(raw.end(), row, row + image.width);
  }

  std::vector<std::uint8_t> idat;
  idat.push_back(0x78);
  idat.push_back(0x01);
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t block = std::min<std::size_t>(65535, raw.size() - pos);
    const bool final_block = pos + block == raw.size();
    idat.push_back(final_block ? 1 : 0);
    idat.push_back(std::uint8_t(block & 0xff));
    idat.push_back(std::uint8_t(block >> 8));
    idat.push_back(std::uint8_t(~block & 0xff));
    idat.push_back(std::uint8_t((~block >> 8) & 0xff));
    idat.insert(idat.end(), raw.begin() + pos, raw.begin() + pos + block);
    pos += block;
  }
  put_u32_be(idat, adler32(raw.data(), raw.size()));
  append_chunk(out, "IDAT", idat);

  append_chunk(out, "IEND", {});
  return out;
}

GrayImage decode_gray(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    throw InputError("not a PNG file");

  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  bool saw_ihdr = false, saw_iend = false;
  std::vector<std::uint8_t> idat;

  std::size_t pos = 8;
  while (pos + 12 <= bytes.size() && !saw_iend) {
    const std::uint32_t len = read_u32_be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw InputError("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;
    const std::uint32_t expected_crc = read_u32_be(payload + len);
    if (crc32(bytes.data() + pos + 4, len + 4) != expected_crc)
      throw InputError("PNG chunk CRC mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw InputError("bad IHDR length");
      width = int(read_u32_be(payload));
      height = int(read_u32_be(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[10] != 0 || payload[11] != 0) throw InputError("bad IHDR methods");
      if (payload[12] != 0) throw InputError("interlaced PNG not supported");
      if (width <= 0 || height <= 0) throw InputError("bad PNG dimensions");
      if (bit_depth != 8 && bit_depth != 16)
        throw InputError("unsupported bit depth " + std::to_string(bit_depth));
      if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
        throw InputError("unsupported color type " + std::to_string(color_type));
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    // Ancillary chunks are skipped.
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || idat.empty()) throw InputError("incomplete PNG");

  const int channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
  const int sample_bytes = bit_depth / 8;
  const int bpp = channels * sample_bytes;
  const int stride = width * bpp;

  std::vector<std::uint8_t> raw = zlib_inflate(idat);
  if (raw.size() != std::size_t(height) * (stride + 1))
    throw InputError("decompressed size mismatch");
  unfilter(raw, height, stride, bpp);

  GrayImage img(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + std::size_t(y) * (stride + 1) + 1;
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = row + std::size_t(x) * bpp;
      std::uint8_t gray;
      if (channels <= 2) {
        gray = px[0];  // 16-bit: high byte first in PNG byte order
      } else {
        const int r = px[0], g = px[sample_bytes], b = px[2 * sample_bytes];
        gray = std::uint8_t((r * 299 + g * 587 + b * 114 + 500) / 1000);
      }
      img.set(x, y, gray);
    }
  }
  return img;
}

}  // namespace lrmr::png
