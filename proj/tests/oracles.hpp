#pragma once

// Brute-force references. Each one restates a rule in the most literal way
// possible and shares no code with the engine.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

/// Phrase boundaries by walking every integer bar position once.
inline std::vector<int> phrase_boundaries(int len, int duration, const std::vector<int>& cues) {
  std::set<int> cue_set(cues.begin(), cues.end());
  const int c0 = cues.front();
  std::vector<int> b;
  // Backward: every len-th position before c0.
  int steps = 0;
  for (int pos = c0 - 1; pos >= 0; --pos)
    if (++steps % len == 0) b.push_back(pos);
  b.push_back(c0);
  // Forward: count positions since the last boundary; a cue or a full phrase closes it.
  int since = 0;
  for (int pos = c0 + 1; pos < duration; ++pos) {
    ++since;
    if (cue_set.count(pos) || since == len) {
      b.push_back(pos);
      since = 0;
    }
  }
  std::sort(b.begin(), b.end());
  return b;
}

/// Single-linkage clusters (union-find over all pairs), each replaced by its extent midpoint.
inline std::vector<double> merge_cues(const std::vector<double>& cues, double threshold) {
  const std::size_t n = cues.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = cues[i] > cues[j] ? cues[i] - cues[j] : cues[j] - cues[i];
      if (gap <= threshold) parent[find(i)] = find(j);
    }
  std::vector<std::pair<double, double>> extent(n, {1e300, -1e300});
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    used[r] = true;
    extent[r].first = std::min(extent[r].first, cues[i]);
    extent[r].second = std::max(extent[r].second, cues[i]);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i)
    if (used[i]) out.push_back((extent[i].first + extent[i].second) / 2.0);
  std::sort(out.begin(), out.end());
  return out;
}

struct Entry {
  std::int64_t column;
  double score;
};

/// Repeatedly takes the best remaining admissible entry. O(n^2).
inline std::vector<std::int64_t> select_peaks(std::vector<Entry> entries, std::int64_t radius, double threshold) {
  std::vector<std::int64_t> chosen;
  std::vector<bool> gone(entries.size(), false);
  for (;;) {
    int best = -1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (gone[i] || entries[i].score < threshold) continue;
      bool blocked = false;
      for (auto c : chosen)
        if (std::llabs(c - entries[i].column) <= radius) blocked = true;
      if (blocked) {
        gone[i] = true;
        continue;
      }
      if (best < 0 || entries[i].score > entries[best].score ||
          (entries[i].score == entries[best].score && entries[i].column < entries[best].column))
        best = static_cast<int>(i);
    }
    if (best < 0) break;
    chosen.push_back(entries[best].column);
    gone[best] = true;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Area under the stepwise PR curve: sum over cutoffs of (delta recall) * precision.
inline double average_precision(const std::vector<bool>& ranked_tp, std::size_t total_truth) {
  if (total_truth == 0) return 0.0;
  double area = 0.0, prev_recall = 0.0;
  for (std::size_t k = 1; k <= ranked_tp.size(); ++k) {
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) tp += ranked_tp[i] ? 1 : 0;
    const double precision = static_cast<double>(tp) / static_cast<double>(k);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_truth);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace oracle
