#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cue/error.hpp"
#include "cue/image.hpp"
#include "cue/mel.hpp"

namespace cue {

inline constexpr int kTileWidth = 355;
inline constexpr int kTileHeight = 128;
inline constexpr int kWindowStride = 89;
inline constexpr int kMinPad = 89;
inline constexpr int kMaxPad = 266;
inline constexpr int kDefaultPad = 177;

/// 8-bit pixel for a dB value: 0 at the floor, 255 at the track maximum.
inline std::uint8_t db_to_pixel(float db, double top_db = 80.0) {
  const double v = std::round(255.0 * (db + top_db) / top_db);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

// Image rows run from the highest Mel band (row 0) down to the lowest.
inline int band_to_row(int band, int n_mels) { return n_mels - 1 - band; }

/// Writes spectrogram column `src` into image column `dst`; out-of-range `src` leaves zeros.
inline void blit_column(const MelSpec& s, std::int64_t src, GrayImage& img, int dst, double top_db = 80.0) {
  if (src < 0 || src >= static_cast<std::int64_t>(s.n_columns())) return;
  const auto col = s.column(static_cast<std::size_t>(src));
  for (int b = 0; b < s.n_mels(); ++b) img.at(band_to_row(b, s.n_mels()), dst) = db_to_pixel(col[b], top_db);
}

/// Crops `columns` starting at `left` (may be negative or run past the end), zero-filled outside S.
inline GrayImage crop(const MelSpec& s, std::int64_t left, int columns = kTileWidth, double top_db = 80.0) {
  GrayImage img(columns, s.n_mels(), 0);
  for (int i = 0; i < columns; ++i) blit_column(s, left + i, img, i, top_db);
  return img;
}

// Full-height box covering tile columns [x0, x1).
struct TileBox {
  int x0 = 0;
  int x1 = 0;
  int width() const { return x1 - x0; }
  friend bool operator==(const TileBox&, const TileBox&) = default;
};

/// Box of width `w` centred on tile column `center`, cropped to the tile. Empty when fully outside.
inline std::optional<TileBox> centered_box(std::int64_t center, int w, int tile_width = kTileWidth) {
  const std::int64_t half = w / 2;
  const std::int64_t x0 = std::max<std::int64_t>(0, center - half);
  const std::int64_t x1 = std::min<std::int64_t>(tile_width, center - half + w);
  if (x0 >= x1) return std::nullopt;
  return TileBox{static_cast<int>(x0), static_cast<int>(x1)};
}

struct TrainingTile {
  GrayImage image;
  std::int64_t left = 0;        // absolute column of tile column 0, p - o
  std::int64_t cue_column = 0;  // p
  int offset = 0;               // o
  std::vector<TileBox> boxes;   // first entry belongs to the anchoring cue
};

/// Training crop around cue column `p` with the cue at tile column `o`.
/// Every other cue column that lands inside the tile gets a box as well.
inline TrainingTile training_tile(const MelSpec& s, std::int64_t p, int o, int w,
                                  std::span<const std::int64_t> other_cues = {}, double top_db = 80.0) {
  if (o < 0 || o >= kTileWidth) throw Error("training_tile: offset must lie in [0, 355)");
  if (w <= 0 || w % 2 == 0) throw Error("training_tile: box width must be odd and positive");
  if (p < 0 || p >= static_cast<std::int64_t>(s.n_columns())) throw Error("training_tile: cue column outside S");
  TrainingTile t;
  t.left = p - o;
  t.cue_column = p;
  t.offset = o;
  t.image = crop(s, t.left, kTileWidth, top_db);
  t.boxes.push_back(*centered_box(o, w));
  for (std::int64_t q : other_cues) {
    if (q == p) continue;
    if (auto box = centered_box(q - t.left, w)) t.boxes.push_back(*box);
  }
  return t;
}

struct InferenceWindow {
  GrayImage image;
  std::int64_t left_edge = 0;  // in padded coordinates; real column c sits at padded c + pad
};

inline void check_pad(int pad) {
  if (pad < kMinPad || pad > kMaxPad) throw ConfigError("pad must lie in [89, 266]");
}

/// Left edges of all windows over `n_columns` real columns preceded by `pad` zero columns.
/// Every padded column below pad + n_columns is covered; the last window may run into right padding.
inline std::vector<std::int64_t> window_left_edges(std::size_t n_columns, int pad, int stride = kWindowStride) {
  if (n_columns == 0) throw Error("inference_windows: spectrogram has no columns");
  check_pad(pad);
  std::vector<std::int64_t> edges;
  const auto padded = static_cast<std::int64_t>(n_columns) + pad;
  for (std::int64_t e = 0; e < padded; e += stride) edges.push_back(e);
  return edges;
}

inline std::vector<InferenceWindow> inference_windows(const MelSpec& s, int pad, int stride = kWindowStride,
                                                      double top_db = 80.0) {
  std::vector<InferenceWindow> out;
  for (std::int64_t e : window_left_edges(s.n_columns(), pad, stride))
    out.push_back({crop(s, e - pad, kTileWidth, top_db), e});
  return out;
}

}  // namespace cue
