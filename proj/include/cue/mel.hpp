#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "cue/audio.hpp"
#include "cue/detail/parallel.hpp"
#include "cue/error.hpp"

namespace cue {

struct MelParams {
  int sample_rate = 22050;
  int n_fft = 2048;
  int hop = 512;
  int n_mels = 128;
  double f_min = 0.0;
  double f_max = 11025.0;
  double top_db = 80.0;  // floor below the per-track maximum
  double amin = 1e-10;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Full-track Mel spectrogram in dB relative to the track maximum.
/// Stored column-major: each column's `n_mels` values are contiguous.
class MelSpec {
public:
  MelSpec() = default;
  MelSpec(int n_mels, std::size_t n_columns, int sample_rate = 22050, int hop = 512, float fill = 0.0f)
      : n_mels_(n_mels), n_columns_(n_columns), sample_rate_(sample_rate), hop_(hop),
        data_(static_cast<std::size_t>(n_mels) * n_columns, fill) {}

  int n_mels() const { return n_mels_; }
  std::size_t n_columns() const { return n_columns_; }
  int sample_rate() const { return sample_rate_; }
  int hop() const { return hop_; }

  float& at(int band, std::size_t column) { return data_[column * static_cast<std::size_t>(n_mels_) + band]; }
  float at(int band, std::size_t column) const { return data_[column * static_cast<std::size_t>(n_mels_) + band]; }

  std::span<float> column(std::size_t c) {
    return {data_.data() + c * static_cast<std::size_t>(n_mels_), static_cast<std::size_t>(n_mels_)};
  }
  std::span<const float> column(std::size_t c) const {
    return {data_.data() + c * static_cast<std::size_t>(n_mels_), static_cast<std::size_t>(n_mels_)};
  }

  const std::vector<float>& data() const { return data_; }

  double column_time(double column) const { return column * hop_ / sample_rate_; }
  double seconds_per_column() const { return static_cast<double>(hop_) / sample_rate_; }

private:
  int n_mels_ = 0;
  std::size_t n_columns_ = 0;
  int sample_rate_ = 22050;
  int hop_ = 512;
  std::vector<float> data_;
};

inline std::int64_t time_to_column(double seconds, int sample_rate = 22050, int hop = 512) {
  return std::llround(seconds * sample_rate / hop);
}

inline double column_to_time(double column, int sample_rate = 22050, int hop = 512) {
  return column * hop / sample_rate;
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz >= min_log_hz ? min_log_mel + std::log(hz / min_log_hz) / logstep : hz / f_sp;
}

inline double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return mel >= min_log_mel ? min_log_hz * std::exp(logstep * (mel - min_log_mel)) : f_sp * mel;
}

/// Triangular, area-normalized Mel filterbank over `n_fft / 2 + 1` bins.
class MelFilterbank {
public:
  explicit MelFilterbank(const MelParams& p) : n_mels_(p.n_mels), n_bins_(p.n_fft / 2 + 1) {
    weights_.assign(static_cast<std::size_t>(n_mels_) * n_bins_, 0.0);
    const double mel_lo = hz_to_mel(p.f_min), mel_hi = hz_to_mel(p.f_max);
    edges_.resize(static_cast<std::size_t>(n_mels_) + 2);
    for (std::size_t i = 0; i < edges_.size(); ++i)
      edges_[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_mels_ + 1));
    for (int m = 0; m < n_mels_; ++m) {
      const double lo = edges_[m], mid = edges_[m + 1], hi = edges_[m + 2];
      const double norm = 2.0 / (hi - lo);
      for (int k = 0; k < n_bins_; ++k) {
        const double f = static_cast<double>(k) * p.sample_rate / p.n_fft;
        const double rise = (f - lo) / (mid - lo);
        const double fall = (hi - f) / (hi - mid);
        weight(m, k) = std::max(0.0, std::min(rise, fall)) * norm;
      }
    }
  }

  int n_mels() const { return n_mels_; }
  int n_bins() const { return n_bins_; }
  double weight(int mel, int bin) const { return weights_[static_cast<std::size_t>(mel) * n_bins_ + bin]; }
  // Lower edge, centre, and upper edge of filter m are center_hz(m - 1), center_hz(m), center_hz(m + 1).
  double center_hz(int mel) const { return edges_[static_cast<std::size_t>(mel) + 1]; }

  void apply(std::span<const double> power, std::span<double> out) const {
    for (int m = 0; m < n_mels_; ++m) {
      const double* w = &weights_[static_cast<std::size_t>(m) * n_bins_];
      double acc = 0.0;
      for (int k = 0; k < n_bins_; ++k) acc += w[k] * power[k];
      out[m] = acc;
    }
  }

private:
  double& weight(int mel, int bin) { return weights_[static_cast<std::size_t>(mel) * n_bins_ + bin]; }

  int n_mels_;
  int n_bins_;
  std::vector<double> weights_;
  std::vector<double> edges_;
};

namespace detail {

// FFTW's planner is not re-entrant; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(double* p) const { fftw_free(p); }
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

class RealFft {
public:
  explicit RealFft(int n)
      : n_(n), in_(fftw_alloc_real(static_cast<std::size_t>(n))),
        out_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n_, in_.get(), out_.get(), FFTW_ESTIMATE);
    if (!plan_) throw Error("fftw: planning failed");
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  double* input() { return in_.get(); }
  const fftw_complex* output() const { return out_.get(); }
  void execute() { fftw_execute(plan_); }

private:
  int n_;
  std::unique_ptr<double[], FftwDeleter> in_;
  std::unique_ptr<fftw_complex[], FftwDeleter> out_;
  fftw_plan plan_ = nullptr;
};

// numpy-style "reflect" (edge sample not repeated), folding repeatedly for short signals.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace detail

/// Mel power spectrogram for mono PCM. Input at another rate is resampled
/// first. Frames are centred (reflect padding by n_fft / 2), Hann-windowed, and
/// the result is converted to dB against the global maximum, floored at
/// `-top_db`.
inline MelSpec mel_spectrogram(const Audio& audio, const MelParams& p = {}) {
  if (audio.sample_rate <= 0) throw AudioError("mel_spectrogram: sample rate must be positive");
  if (audio.samples.empty()) throw AudioError("mel_spectrogram: empty input");
  const Audio resampled = audio.sample_rate == p.sample_rate ? Audio{} : resample(audio, p.sample_rate);
  const std::vector<float>& x = audio.sample_rate == p.sample_rate ? audio.samples : resampled.samples;

  const auto len = static_cast<std::int64_t>(x.size());
  const std::int64_t half = p.n_fft / 2;
  const auto n_cols = static_cast<std::size_t>(1 + len / p.hop);
  const int n_bins = p.n_fft / 2 + 1;

  std::vector<double> window(static_cast<std::size_t>(p.n_fft));
  for (int i = 0; i < p.n_fft; ++i)  // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / p.n_fft);

  const MelFilterbank bank(p);
  std::vector<double> mel_power(static_cast<std::size_t>(p.n_mels) * n_cols);

  detail::parallel_for(n_cols, p.threads ? p.threads : detail::default_threads(), [&](std::size_t b, std::size_t e) {
    detail::RealFft fft(p.n_fft);
    std::vector<double> power(static_cast<std::size_t>(n_bins));
    for (std::size_t c = b; c < e; ++c) {
      const std::int64_t start = static_cast<std::int64_t>(c) * p.hop - half;
      double* in = fft.input();
      for (int i = 0; i < p.n_fft; ++i) {
        const std::int64_t idx = start + i;
        const double s = (idx >= 0 && idx < len) ? x[static_cast<std::size_t>(idx)]
                                                  : x[static_cast<std::size_t>(detail::reflect_index(idx, len))];
        in[i] = s * window[i];
      }
      fft.execute();
      const fftw_complex* out = fft.output();
      for (int k = 0; k < n_bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
      bank.apply(power, std::span<double>(&mel_power[c * p.n_mels], static_cast<std::size_t>(p.n_mels)));
    }
  });

  MelSpec spec(p.n_mels, n_cols, p.sample_rate, p.hop, static_cast<float>(-p.top_db));
  const double ref = *std::max_element(mel_power.begin(), mel_power.end());
  if (ref <= p.amin) return spec;  // silence sits entirely on the floor
  const double ref_db = 10.0 * std::log10(ref);
  for (std::size_t c = 0; c < n_cols; ++c)
    for (int m = 0; m < p.n_mels; ++m) {
      const double db = 10.0 * std::log10(std::max(mel_power[c * p.n_mels + m], p.amin)) - ref_db;
      spec.at(m, c) = static_cast<float>(std::max(db, -p.top_db));
    }
  return spec;
}

}  // namespace cue
