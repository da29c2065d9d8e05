#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cue/error.hpp"

namespace cue {

// All quantities in bars.
struct PhraseSpec {
  int phrase_len = 16;
  double duration = 0.0;
  std::vector<double> cues;  // strictly ascending
};

struct PhraseBoundaries {
  std::vector<double> boundaries;
};

inline void validate(const PhraseSpec& spec) {
  if (spec.cues.empty()) throw Error("phrasing: C must be non-empty");
  if (spec.phrase_len < 1) throw Error("phrasing: phrase length must be >= 1");
  if (!(spec.duration > 0.0)) throw Error("phrasing: duration must be positive");
  if (spec.cues.front() < 0.0) throw Error("phrasing: cues must be non-negative");
  if (!std::is_sorted(spec.cues.begin(), spec.cues.end()) ||
      std::adjacent_find(spec.cues.begin(), spec.cues.end()) != spec.cues.end())
    throw Error("phrasing: cues must be strictly ascending");
  if (spec.cues.back() >= spec.duration) throw Error("phrasing: last cue must precede the track end");
}

/// Phrase boundaries implied by a cue set.
///
/// The section before the first cue is filled backwards in steps of one phrase.
/// From the first cue onwards we step forward one phrase at a time; a step that
/// reaches or jumps over a cue lands on that cue instead, which starts a new
/// (possibly irregular) phrase there. The first boundary at or past the track
/// end is dropped.
inline PhraseBoundaries phrase_boundaries(const PhraseSpec& spec) {
  validate(spec);
  const double len = spec.phrase_len;
  const auto& cues = spec.cues;

  PhraseBoundaries out;
  auto& b = out.boundaries;
  for (double x = cues.front() - len; x >= 0.0; x -= len) b.push_back(x);
  std::reverse(b.begin(), b.end());
  b.push_back(cues.front());

  double cur = cues.front();
  auto next_cue = cues.begin() + 1;
  for (;;) {
    const double candidate = cur + len;
    double next = candidate;
    if (next_cue != cues.end() && *next_cue <= candidate) next = *next_cue++;
    if (next >= spec.duration) break;
    b.push_back(next);
    cur = next;
  }
  return out;
}

}  // namespace cue
