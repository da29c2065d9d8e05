#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cue/analyze.hpp"
#include "cue/config.hpp"
#include "cue/dataset.hpp"
#include "cue/detail/atomic_file.hpp"
#include "cue/detail/parallel.hpp"
#include "cue/image.hpp"
#include "cue/tiles.hpp"

namespace cue {

struct TileJob {
  const TrackRecord* track = nullptr;
  std::filesystem::path audio;
};

struct TileExportSummary {
  std::size_t images = 0;
  std::size_t annotations = 0;
};

/// Detection annotations for a set of exported tiles; boxes are [x, y, w, h]
/// with a top-left origin and span the full image height.
inline nlohmann::json annotation_document(const std::vector<std::pair<std::string, TrainingTile>>& tiles,
                                          const std::vector<std::string>& track_names) {
  nlohmann::json doc;
  doc["images"] = nlohmann::json::array();
  doc["annotations"] = nlohmann::json::array();
  doc["categories"] = nlohmann::json::array({{{"id", 1}, {"name", "cue"}}});
  std::size_t ann_id = 1;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto& [file, tile] = tiles[i];
    const auto image_id = i + 1;
    doc["images"].push_back({{"id", image_id},
                             {"file", file},
                             {"width", kTileWidth},
                             {"height", kTileHeight},
                             {"track", track_names[i]},
                             {"cue_column", tile.cue_column},
                             {"offset", tile.offset}});
    for (const auto& box : tile.boxes) {
      doc["annotations"].push_back({{"id", ann_id++},
                                    {"image_id", image_id},
                                    {"bbox", {box.x0, 0, box.width(), kTileHeight}},
                                    {"area", box.width() * kTileHeight},
                                    {"iscrowd", 0},
                                    {"category_id", 1}});
    }
  }
  return doc;
}

/// Writes one PNG per (track, cue) plus `annotations.json` into `out_dir`.
/// Offsets are drawn up front from the config seed in job order, so output is
/// independent of the worker count.
inline TileExportSummary export_tiles(const std::vector<TileJob>& jobs, const EngineConfig& cfg,
                                      const std::filesystem::path& out_dir, const std::string& decode_cmd = {}) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::vector<int>> offsets(jobs.size());
  std::vector<std::size_t> first_tile(jobs.size());
  std::size_t total = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    first_tile[j] = total;
    for (std::size_t c = 0; c < jobs[j].track->cues.size(); ++c)
      offsets[j].push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(kTileWidth)));
    total += jobs[j].track->cues.size();
  }

  std::vector<std::pair<std::string, TrainingTile>> tiles(total);
  std::vector<std::string> names(total);
  const unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : detail::default_threads();
  auto mel = cfg.mel_params();
  mel.threads = 1;  // parallelism is across tracks here
  detail::parallel_for(jobs.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const auto& job = jobs[j];
      const MelSpec s = mel_spectrogram(load_audio(job.audio, decode_cmd), mel);
      std::vector<std::int64_t> cue_cols;
      for (double c : job.track->cues) {
        const auto col = time_to_column(c, cfg.sample_rate, cfg.hop);
        cue_cols.push_back(std::clamp<std::int64_t>(col, 0, static_cast<std::int64_t>(s.n_columns()) - 1));
      }
      for (std::size_t c = 0; c < cue_cols.size(); ++c) {
        const std::size_t id = first_tile[j] + c;
        char file[32];
        std::snprintf(file, sizeof file, "tile_%06zu.png", id + 1);
        auto tile = training_tile(s, cue_cols[c], offsets[j][c], cfg.box_width, cue_cols, cfg.top_db);
        detail::write_atomically(out_dir / file, [&](const auto& tmp) { write_png(tmp.string(), tile.image); });
        tiles[id] = {file, std::move(tile)};
        names[id] = job.track->key.str();
      }
    }
  });

  const auto doc = annotation_document(tiles, names);
  detail::write_file_atomically(out_dir / "annotations.json", doc.dump(2));
  return {total, doc["annotations"].size()};
}

}  // namespace cue
