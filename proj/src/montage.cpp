#include "lrmr/montage.hpp"

#include <algorithm>
#include <cstdint>

#include <json.hpp>

#include "lrmr/errors.hpp"

namespace lrmr {

using nlohmann::json;

namespace {

// 5x7 glyphs for N and the digits; bit 4 is the leftmost column.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kGlyphs[] = {
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'N', {0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001, 0b10001}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kGlyphs)
    if (g.ch == c) return &g;
  return nullptr;
}

int glyph_width_for_height(int h) { return std::max(1, (10 * h + 7) / 14); }

// Nearest-neighbour scaled glyph blit; white glyph pixels only.
void draw_glyph(GrayImage& img, int x0, int y0, const Glyph& g, int h) {
  const int w = glyph_width_for_height(h);
  for (int y = 0; y < h; ++y) {
    const int sy = y * 7 / h;
    for (int x = 0; x < w; ++x) {
      const int sx = x * 5 / w;
      if ((g.rows[sy] >> (4 - sx)) & 1) {
        const int px = x0 + x, py = y0 + y;
        if (px >= 0 && py >= 0 && px < img.width && py < img.height)
          img.set(px, py, 255);
      }
    }
  }
}

// Black backing box plus white glyphs at the tile's top-left corner.
void draw_label(GrayImage& img, int tile_x, int tile_y, const std::string& text,
                const MontageConfig& config) {
  const int h = config.label_glyph_height_px;
  const int gw = glyph_width_for_height(h);
  const int gap = std::max(1, h / 7);
  const int text_w = int(text.size()) * gw + (int(text.size()) - 1) * gap;
  const int pad = 1;

  const int box_x = tile_x + config.label_margin_px;
  const int box_y = tile_y + config.label_margin_px;
  const int box_w = text_w + 2 * pad;
  const int box_h = h + 2 * pad;
  for (int y = 0; y < box_h; ++y)
    for (int x = 0; x < box_w; ++x) {
      const int px = box_x + x, py = box_y + y;
      if (px >= 0 && py >= 0 && px < img.width && py < img.height) img.set(px, py, 0);
    }

  int cx = box_x + pad;
  for (char c : text) {
    if (const Glyph* g = find_glyph(c)) draw_glyph(img, cx, box_y + pad, *g, h);
    cx += gw + gap;
  }
}

}  // namespace

void validate_montage_config(const MontageConfig& config) {
  if (config.tile_px < 32)
    throw ConfigError("tile_px must be >= 32, got " + std::to_string(config.tile_px));
  if (config.label_glyph_height_px >= config.tile_px / 2)
    throw ConfigError("label_glyph_height_px must be < tile_px/2");
  if (config.label_glyph_height_px < 5)
    throw ConfigError("label_glyph_height_px must be >= 5");
  if (config.label_margin_px < 0) throw ConfigError("label_margin_px must be >= 0");
  if (config.background_gray < 0 || config.background_gray > 255)
    throw ConfigError("background_gray must be in 0..255");
}

GridShape layout_grid(int k) {
  if (k < 1) throw ValidationError("grid needs at least one tile");
  int cols = 1;
  while (cols * cols < k) ++cols;
  const int rows = (k + cols - 1) / cols;
  return {rows, cols};
}

GrayImage resize_bilinear(const GrayImage& src, int dst_w, int dst_h) {
  if (src.width <= 0 || src.height <= 0) throw InputError("cannot resize empty image");
  if (dst_w <= 0 || dst_h <= 0) throw ValidationError("target size must be positive");

  GrayImage dst(dst_w, dst_h);
  // 16.16 fixed point; sample at pixel centres.
  auto coord = [](int d, int src_len, int dst_len) -> std::int64_t {
    std::int64_t fp = (std::int64_t(2 * d + 1) * src_len << 16) / (2 * dst_len) - 32768;
    const std::int64_t max_fp = std::int64_t(src_len - 1) << 16;
    return std::clamp<std::int64_t>(fp, 0, max_fp);
  };
  for (int y = 0; y < dst_h; ++y) {
    const std::int64_t sy = coord(y, src.height, dst_h);
    const int y0 = int(sy >> 16);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const std::uint64_t fy = sy & 0xffff;
    for (int x = 0; x < dst_w; ++x) {
      const std::int64_t sx = coord(x, src.width, dst_w);
      const int x0 = int(sx >> 16);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const std::uint64_t fx = sx & 0xffff;

      const std::uint64_t top =
          src.at(x0, y0) * (65536 - fx) + src.at(x1, y0) * fx;
      const std::uint64_t bottom =
          src.at(x0, y1) * (65536 - fx) + src.at(x1, y1) * fx;
      const std::uint64_t value =
          (top * (65536 - fy) + bottom * fy + (std::uint64_t(1) << 31)) >> 32;
      dst.set(x, y, std::uint8_t(std::min<std::uint64_t>(value, 255)));
    }
  }
  return dst;
}

MontageImage build_montage(const PatientRecord& patient, const MontageConfig& config) {
  validate_montage_config(config);
  if (patient.patches.empty())
    throw ValidationError("patient " + patient.patient_id + " has no node patches");
  for (std::size_t i = 0; i < patient.patches.size(); ++i) {
    const auto& patch = patient.patches[i];
    if (patch.index != int(i) + 1)
      throw ValidationError("patch indices must be contiguous from 1; got index " +
                            std::to_string(patch.index) + " at position " +
                            std::to_string(i + 1));
    if (patch.image.width <= 0 || patch.image.height <= 0)
      throw InputError("patch " + patch.label() + " of patient " + patient.patient_id +
                       " has no image data");
  }

  const int k = int(patient.patches.size());
  const GridShape grid = layout_grid(k);

  MontageImage montage;
  montage.patient_id = patient.patient_id;
  montage.rows = grid.rows;
  montage.cols = grid.cols;
  montage.tile_px = config.tile_px;
  montage.pixels = GrayImage(grid.cols * config.tile_px, grid.rows * config.tile_px,
                             std::uint8_t(config.background_gray));

  for (int i = 0; i < k; ++i) {
    const int row = i / grid.cols;
    const int col = i % grid.cols;
    const GrayImage tile =
        resize_bilinear(patient.patches[i].image, config.tile_px, config.tile_px);
    const int ox = col * config.tile_px;
    const int oy = row * config.tile_px;
    for (int y = 0; y < config.tile_px; ++y)
      for (int x = 0; x < config.tile_px; ++x)
        montage.pixels.set(ox + x, oy + y, tile.at(x, y));
    const std::string label = patient.patches[i].label();
    draw_label(montage.pixels, ox, oy, label, config);
    montage.tile_map[label] = {row, col};
  }
  return montage;
}

std::string montage_sidecar_json(const MontageImage& montage) {
  json j;
  j["patient_id"] = montage.patient_id;
  j["rows"] = montage.rows;
  j["cols"] = montage.cols;
  j["tile_px"] = montage.tile_px;
  j["node_count"] = int(montage.tile_map.size());
  json map = json::object();
  for (const auto& [label, cell] : montage.tile_map)
    map[label] = json::array({cell.first, cell.second});
  j["tile_map"] = std::move(map);
  return j.dump();
}

int node_count_from_sidecar(const std::string& json_text) {
  try {
    return json::parse(json_text).at("node_count").get<int>();
  } catch (const json::exception& e) {
    throw InputError(std::string("bad montage sidecar: ") + e.what());
  }
}

}  // namespace lrmr
