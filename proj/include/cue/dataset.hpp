#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "cue/beatgrid.hpp"
#include "cue/error.hpp"

namespace cue {

/// Lowercased, whitespace-collapsed (artist, title) pair.
struct TrackKey {
  std::string artist;
  std::string title;

  static std::string normalize(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char ch : s) {
      if (std::isspace(ch)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
    }
    return out;
  }

  static TrackKey make(std::string_view artist, std::string_view title) {
    return TrackKey{normalize(artist), normalize(title)};
  }

  // Display form used in prediction/candidate files.
  std::string str() const { return artist + " - " + title; }

  friend auto operator<=>(const TrackKey&, const TrackKey&) = default;
};

struct CollectionEntry {
  TrackKey key;
  double bpm = 0.0;
  double grid_offset = 0.0;
  int beats_per_bar = 4;
  int first_beat_number = 1;
  double duration = 0.0;
  std::vector<double> cues;
  std::optional<std::string> external_id;
  std::string collection;
};

struct TrackRecord {
  TrackKey key;
  BeatGrid grid{120.0, 0.0};
  std::vector<double> cues;
  double duration = 0.0;
  int source_count = 1;
  std::optional<std::string> external_id;
  double bpm_spread = 0.0;  // max - min over contributing collections

  static constexpr double kBpmSpreadLimit = 1.0;
  bool bpm_spread_flagged() const { return bpm_spread > kBpmSpreadLimit; }
};

/// Throws FormatError when the entry breaks an ingestion rule.
inline void validate_entry(const CollectionEntry& e) {
  const std::string who = "track '" + e.key.str() + "'";
  if (!(e.bpm > 0.0) || !std::isfinite(e.bpm)) throw FormatError(who + ": bpm must be positive");
  if (!std::isfinite(e.grid_offset)) throw FormatError(who + ": grid offset must be finite");
  if (e.beats_per_bar != 4) throw FormatError(who + ": only 4/4 tracks are supported");
  if (e.first_beat_number < 1 || e.first_beat_number > e.beats_per_bar)
    throw FormatError(who + ": first_beat_number out of range");
  if (!(e.duration > 0.0)) throw FormatError(who + ": duration must be positive");
  for (double c : e.cues)
    if (!(c >= 0.0 && c <= e.duration)) throw FormatError(who + ": cue outside [0, duration]");
}

/// Replaces every run of cues whose neighbouring gaps are at most a quarter
/// beat with the midpoint of the run's extent.
inline std::vector<double> merge_cues(std::vector<double> cues, const BeatGrid& grid) {
  std::sort(cues.begin(), cues.end());
  const double quarter = grid.beat_duration() / 4.0;
  std::vector<double> out;
  std::size_t i = 0;
  while (i < cues.size()) {
    std::size_t j = i;
    while (j + 1 < cues.size() && cues[j + 1] - cues[j] <= quarter) ++j;
    out.push_back((cues[i] + cues[j]) / 2.0);
    i = j + 1;
  }
  return out;
}

inline TrackRecord merge_duplicates(const std::vector<CollectionEntry>& entries) {
  if (entries.empty()) throw Error("merge_duplicates: no entries");
  const auto& first = entries.front();
  double bpm_sum = 0.0, offset_sum = 0.0, duration = 0.0;
  double bpm_min = first.bpm, bpm_max = first.bpm;
  std::vector<double> all_cues;
  std::optional<std::string> external_id;
  for (const auto& e : entries) {
    if (e.key != first.key) throw Error("merge_duplicates: entries do not share a track key");
    bpm_sum += e.bpm;
    offset_sum += e.grid_offset;
    bpm_min = std::min(bpm_min, e.bpm);
    bpm_max = std::max(bpm_max, e.bpm);
    duration = std::max(duration, e.duration);
    all_cues.insert(all_cues.end(), e.cues.begin(), e.cues.end());
    if (!external_id && e.external_id) external_id = e.external_id;
  }
  const double n = static_cast<double>(entries.size());
  TrackRecord rec;
  rec.key = first.key;
  // Bar numbering follows the first contributing collection.
  rec.grid = BeatGrid(bpm_sum / n, offset_sum / n, first.beats_per_bar, first.first_beat_number);
  rec.cues = merge_cues(std::move(all_cues), rec.grid);
  rec.duration = duration;
  rec.source_count = static_cast<int>(entries.size());
  rec.external_id = external_id;
  rec.bpm_spread = bpm_max - bpm_min;
  return rec;
}

/// Groups entries by track key and merges each group. Output is sorted by key.
inline std::vector<TrackRecord> merge_collections(const std::vector<CollectionEntry>& entries) {
  std::map<TrackKey, std::vector<CollectionEntry>> groups;
  for (const auto& e : entries) groups[e.key].push_back(e);
  std::vector<TrackRecord> out;
  out.reserve(groups.size());
  for (const auto& [key, group] : groups) out.push_back(merge_duplicates(group));
  return out;
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CueIndexEntry {
  TrackKey key;
  std::size_t cue_index = 0;
  double cue_time = 0.0;
};

struct DatasetSplit {
  std::vector<TrackKey> train, val, test;
  // One entry per (track, cue) for the training and validation splits.
  std::vector<CueIndexEntry> train_index, val_index;
};

namespace detail {

// Largest-remainder apportionment with at least one track per split.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
  const std::array<double, 3> ratios{r.train, r.val, r.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  while (assigned < n) {
    const auto i = std::max_element(rem.begin(), rem.end()) - rem.begin();
    ++sizes[i];
    rem[i] = -1.0;
    ++assigned;
  }
  while (assigned > n) {  // only reachable through the epsilon above
    const auto i = std::max_element(sizes.begin(), sizes.end()) - sizes.begin();
    --sizes[i];
    --assigned;
  }
  for (int i = 0; i < 3; ++i) {
    if (sizes[i] == 0) {
      const auto donor = std::max_element(sizes.begin(), sizes.end()) - sizes.begin();
      --sizes[donor];
      ++sizes[i];
    }
  }
  return sizes;
}

}  // namespace detail

/// Deterministic track-level split. Records are ordered by key before
/// shuffling so the result depends only on the set of tracks and the seed.
inline DatasetSplit split_dataset(const std::vector<TrackRecord>& records, const SplitRatios& ratios,
                                  std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0))
    throw Error("split_dataset: ratios must be positive");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-6)
    throw Error("split_dataset: ratios must sum to 1");
  if (records.size() < 3) throw Error("split_dataset: fewer records than splits");

  std::vector<const TrackRecord*> order;
  for (const auto& r : records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->key < b->key; });
  if (std::adjacent_find(order.begin(), order.end(), [](auto* a, auto* b) { return a->key == b->key; }) !=
      order.end())
    throw Error("split_dataset: duplicate track keys; merge collections first");

  std::mt19937_64 rng(seed);
  // Fisher-Yates with our own index draw; std::shuffle's output is implementation-defined.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }

  const auto sizes = detail::split_sizes(order.size(), ratios);
  DatasetSplit out;
  std::size_t pos = 0;
  auto take = [&](std::vector<TrackKey>& keys, std::vector<CueIndexEntry>* index, std::size_t count) {
    std::vector<const TrackRecord*> part(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                         order.begin() + static_cast<std::ptrdiff_t>(pos + count));
    pos += count;
    std::sort(part.begin(), part.end(), [](auto* a, auto* b) { return a->key < b->key; });
    for (const auto* r : part) {
      keys.push_back(r->key);
      if (index)
        for (std::size_t c = 0; c < r->cues.size(); ++c) index->push_back({r->key, c, r->cues[c]});
    }
  };
  take(out.train, &out.train_index, sizes[0]);
  take(out.val, &out.val_index, sizes[1]);
  take(out.test, nullptr, sizes[2]);
  return out;
}

struct CorpusStats {
  std::size_t track_count = 0;
  std::size_t cue_count = 0;
  double mean_cues_per_track = 0.0;
  std::map<std::int64_t, std::size_t> cue_position_bars;    // bar index -> count
  std::map<std::int64_t, std::size_t> inter_cue_distance_bars;  // bar distance -> count
};

inline CorpusStats corpus_stats(const std::vector<TrackRecord>& records) {
  CorpusStats s;
  s.track_count = records.size();
  for (const auto& r : records) {
    s.cue_count += r.cues.size();
    std::vector<std::int64_t> bars;
    for (double c : r.cues) bars.push_back(r.grid.quantize_to_bar(c));
    std::sort(bars.begin(), bars.end());
    for (std::size_t i = 0; i < bars.size(); ++i) {
      ++s.cue_position_bars[bars[i]];
      if (i > 0) ++s.inter_cue_distance_bars[bars[i] - bars[i - 1]];
    }
  }
  if (s.track_count > 0)
    s.mean_cues_per_track = static_cast<double>(s.cue_count) / static_cast<double>(s.track_count);
  return s;
}

}  // namespace cue
