#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cue/backend.hpp"
#include "cue/dataset.hpp"
#include "cue/evalkit.hpp"
#include "cue/image.hpp"
#include "cue/mel.hpp"
#include "cue/tiles.hpp"

namespace cue {

struct InspectInput {
  const MelSpec* spectrogram = nullptr;  // optional background
  ConfidenceTrace trace;
  std::vector<double> predictions;       // seconds
  const TrackRecord* truth = nullptr;    // optional ground truth and phrase boundaries
  std::size_t n_columns = 0;             // used when no spectrogram is given
  int sample_rate = 22050;
  int hop = 512;
  double top_db = 80.0;
};

struct Marker {
  std::string kind;  // prediction_hit, prediction_miss, prediction, truth, phrase16
  double time_s = 0.0;
  std::int64_t x = 0;
};

struct InspectRender {
  RgbImage image;
  std::vector<Marker> markers;

  nlohmann::json manifest() const {
    nlohmann::json j;
    j["width"] = image.width;
    j["height"] = image.height;
    j["markers"] = nlohmann::json::array();
    for (const auto& m : markers) j["markers"].push_back({{"kind", m.kind}, {"time_s", m.time_s}, {"x", m.x}});
    return j;
  }
};

/// Spectrogram with the confidence curve in white, predictions in magenta
/// (red when no ground-truth cue lies within one beat), cues in orange and
/// 16-bar phrase boundaries as dashed orange lines.
inline InspectRender render_inspection(const InspectInput& in) {
  std::size_t width = in.spectrogram ? in.spectrogram->n_columns() : in.n_columns;
  if (!in.trace.entries.empty()) width = std::max<std::size_t>(width, in.trace.entries.back().column + 1);
  for (double t : in.predictions)
    width = std::max<std::size_t>(width, static_cast<std::size_t>(std::max<std::int64_t>(0, time_to_column(t, in.sample_rate, in.hop))) + 1);
  width = std::max<std::size_t>(width, 1);
  const int h = kTileHeight;
  InspectRender out{RgbImage(static_cast<int>(width), h), {}};

  if (in.spectrogram) {
    const int bands = in.spectrogram->n_mels();
    for (std::size_t c = 0; c < in.spectrogram->n_columns(); ++c)
      for (int b = 0; b < bands; ++b) {
        const int row = band_to_row(b, bands) * h / bands;
        const auto v = db_to_pixel(in.spectrogram->at(b, c), in.top_db);
        out.image.set(row, static_cast<int>(c), v, v, v);
      }
  }

  auto vline = [&](std::int64_t x, std::uint8_t r, std::uint8_t g, std::uint8_t b, bool dashed) {
    for (int y = 0; y < h; ++y)
      if (!dashed || (y / 4) % 2 == 0) out.image.set(y, static_cast<int>(x), r, g, b);
  };
  auto column_of = [&](double t) { return time_to_column(t, in.sample_rate, in.hop); };

  if (in.truth) {
    for (double t : ground_truth(*in.truth, TruthKind::bars16)) {
      if (std::find(in.truth->cues.begin(), in.truth->cues.end(), t) != in.truth->cues.end()) continue;
      out.markers.push_back({"phrase16", t, column_of(t)});
      vline(column_of(t), 255, 165, 0, true);
    }
    for (double t : in.truth->cues) {
      out.markers.push_back({"truth", t, column_of(t)});
      vline(column_of(t), 255, 165, 0, false);
    }
  }

  // Curve: linear between consecutive trace entries, zero where nothing was reported.
  std::vector<double> score(width, 0.0);
  for (const auto& d : in.trace.entries)
    if (d.column >= 0 && static_cast<std::size_t>(d.column) < width) score[static_cast<std::size_t>(d.column)] = d.score;
  for (std::size_t i = 1; i < in.trace.entries.size(); ++i) {
    const auto& a = in.trace.entries[i - 1];
    const auto& b = in.trace.entries[i];
    for (std::int64_t c = a.column + 1; c < b.column; ++c)
      score[static_cast<std::size_t>(c)] = a.score + (b.score - a.score) * static_cast<double>(c - a.column) / static_cast<double>(b.column - a.column);
  }
  auto y_of = [&](double s) { return (h - 1) - static_cast<int>(std::lround(std::clamp(s, 0.0, 1.0) * (h - 1))); };
  for (std::size_t c = 0; c < width; ++c) {
    const int y = y_of(score[c]);
    const int prev = c > 0 ? y_of(score[c - 1]) : y;
    for (int yy = std::min(y, prev); yy <= std::max(y, prev); ++yy) out.image.set(yy, static_cast<int>(c), 255, 255, 255);
  }

  for (double t : in.predictions) {
    std::string kind = "prediction";
    bool hit = true;
    if (in.truth) {
      const double tol = in.truth->grid.beat_duration();
      hit = std::any_of(in.truth->cues.begin(), in.truth->cues.end(), [&](double c) { return std::abs(c - t) <= tol; });
      kind = hit ? "prediction_hit" : "prediction_miss";
    }
    out.markers.push_back({kind, t, column_of(t)});
    if (hit) vline(column_of(t), 255, 0, 255, false);
    else vline(column_of(t), 255, 0, 0, false);
  }
  return out;
}

}  // namespace cue
