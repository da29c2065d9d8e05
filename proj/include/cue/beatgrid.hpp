#pragma once

#include <cmath>
#include <cstdint>

#include "cue/error.hpp"

namespace cue {

/// Constant-tempo metronome as stored by DJ library software.
///
/// Beat k sits at `grid_offset + k * 60 / bpm`. The grid's first beat carries
/// the number `first_beat_number` within its bar, so beat k is a downbeat iff
/// `(k + first_beat_number - 1) % beats_per_bar == 0`.
class BeatGrid {
public:
  BeatGrid(double bpm, double grid_offset, int beats_per_bar = 4, int first_beat_number = 1)
      : bpm_(bpm), offset_(grid_offset), beats_per_bar_(beats_per_bar), first_beat_(first_beat_number) {
    if (!(bpm > 0.0) || !std::isfinite(bpm)) throw Error("beat grid: bpm must be positive");
    if (!std::isfinite(grid_offset)) throw Error("beat grid: offset must be finite");
    if (beats_per_bar < 1) throw Error("beat grid: beats_per_bar must be >= 1");
    if (first_beat_number < 1 || first_beat_number > beats_per_bar)
      throw Error("beat grid: first_beat_number must lie in [1, beats_per_bar]");
  }

  double bpm() const { return bpm_; }
  double offset() const { return offset_; }
  int beats_per_bar() const { return beats_per_bar_; }
  int first_beat_number() const { return first_beat_; }

  double beat_duration() const { return 60.0 / bpm_; }

  double beat_time(std::int64_t k) const { return offset_ + static_cast<double>(k) * beat_duration(); }

  bool is_downbeat(std::int64_t k) const {
    const std::int64_t m = (k + first_beat_ - 1) % beats_per_bar_;
    return m == 0;
  }

  /// Fractional bar position of `time`; bar 0 starts at the downbeat at or before the grid origin.
  double bar_position(double time) const {
    return ((time - offset_) / beat_duration() + (first_beat_ - 1)) / beats_per_bar_;
  }

  /// Start time of bar `n`. May be negative for bar 0 when the grid starts mid-bar.
  double bar_start_time(double n) const {
    return offset_ + (n * beats_per_bar_ - (first_beat_ - 1)) * beat_duration();
  }

  /// Nearest bar index, half-to-even, clamped at 0.
  std::int64_t quantize_to_bar(double time) const {
    const double q = std::nearbyint(bar_position(time));  // default FE_TONEAREST is half-to-even
    return q < 0.0 ? 0 : static_cast<std::int64_t>(q);
  }

  double bars_to_seconds(double n_bars) const { return n_bars * beats_per_bar_ * beat_duration(); }

  friend bool operator==(const BeatGrid&, const BeatGrid&) = default;

private:
  double bpm_;
  double offset_;
  int beats_per_bar_;
  int first_beat_;
};

inline double beat_duration(const BeatGrid& g) { return g.beat_duration(); }
inline std::int64_t quantize_to_bar(double time, const BeatGrid& g) { return g.quantize_to_bar(time); }
inline double bars_to_seconds(double n_bars, const BeatGrid& g) { return g.bars_to_seconds(n_bars); }

}  // namespace cue
