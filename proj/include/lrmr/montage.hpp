#pragma once

#include <map>
#include <string>
#include <utility>

#include "lrmr/png.hpp"
#include "lrmr/report.hpp"

namespace lrmr {

struct MontageConfig {
  int tile_px = 128;
  int label_margin_px = 4;
  int label_glyph_height_px = 12;
  int background_gray = 0;  // 0..255
};

// Throws ConfigError unless tile_px >= 32, glyph height < tile_px/2 and
// background_gray fits a byte.
void validate_montage_config(const MontageConfig& config);

struct GridShape {
  int rows = 0;
  int cols = 0;
  bool operator==(const GridShape&) const = default;
};

// Near-square grid: cols = ceil(sqrt(k)), rows = ceil(k / cols), row-major.
GridShape layout_grid(int k);

struct MontageImage {
  std::string patient_id;
  int rows = 0;
  int cols = 0;
  int tile_px = 0;
  GrayImage pixels;
  std::map<std::string, std::pair<int, int>> tile_map;  // label -> (row, col)
};

// Resample to exactly dst_w x dst_h, bilinear, aspect ratio not preserved.
// Fixed-point arithmetic, so results are platform-independent.
GrayImage resize_bilinear(const GrayImage& src, int dst_w, int dst_h);

// Compile all patches into one labeled composite. Deterministic
// byte-for-byte for identical inputs and config.
MontageImage build_montage(const PatientRecord& patient, const MontageConfig& config);

// Sidecar describing the grid, canonical JSON.
std::string montage_sidecar_json(const MontageImage& montage);

// node_count recorded in a sidecar produced by montage_sidecar_json.
int node_count_from_sidecar(const std::string& json_text);

}  // namespace lrmr
