#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <set>
#include <vector>

#include "cue/backend.hpp"
#include "cue/beatgrid.hpp"
#include "cue/error.hpp"
#include "cue/mel.hpp"

namespace cue {

inline constexpr double kDefaultThreshold = 0.9;

struct CueCandidate {
  std::int64_t column = 0;
  double time = 0.0;
  double score = 0.0;
  int rank = 0;  // 1 = selected first

  friend bool operator==(const CueCandidate&, const CueCandidate&) = default;
};

/// Greedy peak picking: visit entries by descending score (ties: smaller
/// column first) and keep an entry iff it clears `threshold` and lies strictly
/// farther than `radius` columns from everything kept so far.
/// Output is ordered by column.
inline std::vector<CueCandidate> select_peaks(const ConfidenceTrace& trace, std::int64_t radius,
                                              double threshold = kDefaultThreshold, int sample_rate = 22050,
                                              int hop = 512) {
  if (radius < 0) throw Error("select_peaks: radius must be non-negative");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("select_peaks: threshold must lie in [0, 1]");

  std::vector<Detection> order;
  std::copy_if(trace.entries.begin(), trace.entries.end(), std::back_inserter(order),
               [&](const Detection& d) { return d.score >= threshold; });
  std::sort(order.begin(), order.end(), [](const Detection& a, const Detection& b) {
    return a.score != b.score ? a.score > b.score : a.column < b.column;
  });

  std::set<std::int64_t> kept;
  std::vector<CueCandidate> out;
  for (const auto& d : order) {
    // Only the nearest kept neighbour on each side can violate the radius.
    auto right = kept.lower_bound(d.column);
    if (right != kept.end() && *right - d.column <= radius) continue;
    if (right != kept.begin() && d.column - *std::prev(right) <= radius) continue;
    kept.insert(d.column);
    out.push_back({d.column, column_to_time(static_cast<double>(d.column), sample_rate, hop), d.score,
                   static_cast<int>(out.size()) + 1});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.column < b.column; });
  return out;
}

/// Phrase-length radius in columns for a 4/4 grid at `median_bpm`.
inline std::int64_t radius_from_bars(double bars, double median_bpm, int sample_rate = 22050, int hop = 512) {
  if (!(median_bpm > 0.0)) throw ConfigError("radius_from_bars: median bpm must be positive");
  if (bars < 0.0) throw ConfigError("radius_from_bars: bars must be non-negative");
  const double seconds = BeatGrid(median_bpm, 0.0, 4, 1).bars_to_seconds(bars);
  return std::llround(seconds * sample_rate / hop);
}

}  // namespace cue
