#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "cue/error.hpp"

namespace cue {

struct Audio {
  std::vector<float> samples;  // mono
  int sample_rate = 0;

  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace detail

/// Decodes a RIFF/WAVE buffer (PCM 8/16/24/32-bit, IEEE float 32/64,
/// WAVE_FORMAT_EXTENSIBLE) and downmixes to mono by channel mean.
inline Audio decode_wav(const std::vector<unsigned char>& buf) {
  using detail::le16;
  using detail::le32;
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw AudioError("not a RIFF/WAVE file");

  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* hdr = buf.data() + pos;
    const std::size_t len = le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, buf.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw AudioError("truncated fmt chunk");
      format = le16(buf.data() + body);
      channels = le16(buf.data() + body + 2);
      rate = le32(buf.data() + body + 4);
      bits = le16(buf.data() + body + 14);
      if (format == 0xFFFE) {
        if (avail < 26) throw AudioError("truncated extensible fmt chunk");
        format = le16(buf.data() + body + 24);
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = avail;  // tolerate streaming writers that leave the size unset
    }
    pos = body + len + (len & 1);
  }
  if (channels <= 0 || rate == 0) throw AudioError("missing or invalid fmt chunk");
  if (!data) throw AudioError("missing data chunk");
  if (!(format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) &&
      !(format == 3 && (bits == 32 || bits == 64)))
    throw AudioError("unsupported WAV sample format " + std::to_string(format) + "/" + std::to_string(bits));

  const std::size_t bytes = static_cast<std::size_t>(bits / 8);
  const std::size_t frame = bytes * static_cast<std::size_t>(channels);
  const std::size_t frames = data_len / frame;
  auto sample = [&](const unsigned char* p) -> double {
    if (format == 3) {
      if (bits == 32) {
        float f;
        std::memcpy(&f, p, 4);
        return f;
      }
      double d;
      std::memcpy(&d, p, 8);
      return d;
    }
    switch (bits) {
      case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
      case 16: return static_cast<std::int16_t>(le16(p)) / 32768.0;
      case 24: {
        std::int32_t v = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 | std::int32_t(p[2]) << 16;
        if (v & 0x800000) v |= ~0xFFFFFF;
        return v / 8388608.0;
      }
      default: return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
    }
  };

  Audio out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) acc += sample(data + i * frame + static_cast<std::size_t>(c) * bytes);
    out.samples[i] = static_cast<float>(acc / channels);
  }
  return out;
}

inline Audio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open audio file " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(buf);
  } catch (const AudioError& e) {
    throw AudioError(path + ": " + e.what());
  }
}

/// 16-bit PCM mono encoder, clipping to [-1, 1].
inline std::vector<unsigned char> encode_wav16(const Audio& audio) {
  std::vector<unsigned char> out;
  const auto data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(out, 16);
  detail::put16(out, 1);
  detail::put16(out, 1);
  detail::put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  detail::put32(out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  detail::put16(out, 2);
  detail::put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put32(out, data_len);
  for (float s : audio.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
    detail::put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  return out;
}

inline void write_wav16(const std::string& path, const Audio& audio) {
  const auto bytes = encode_wav16(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AudioError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel, tabulated once
/// per rate pair and linearly interpolated.
class Resampler {
public:
  Resampler(int from_rate, int to_rate, int zero_crossings = 32, double beta = 8.6, double rolloff = 0.945)
      : from_(from_rate), to_(to_rate) {
    if (from_rate <= 0 || to_rate <= 0) throw AudioError("resample: rates must be positive");
    ratio_ = static_cast<double>(to_rate) / from_rate;
    cutoff_ = std::min(1.0, ratio_) * rolloff;  // relative to the input Nyquist
    half_width_ = zero_crossings / cutoff_;      // in input samples
    const double i0_beta = std::cyl_bessel_i(0.0, beta);
    table_.resize(static_cast<std::size_t>(zero_crossings) * kPerCrossing + 2);
    step_ = half_width_ / static_cast<double>(table_.size() - 2);
    for (std::size_t i = 0; i < table_.size(); ++i) {
      const double x = static_cast<double>(i) * step_;
      const double u = std::min(1.0, x / half_width_);
      const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / i0_beta;
      const double arg = std::numbers::pi * cutoff_ * x;
      const double sinc = x == 0.0 ? 1.0 : std::sin(arg) / arg;
      table_[i] = cutoff_ * sinc * win;
    }
    table_.back() = 0.0;
  }

  std::vector<float> process(const std::vector<float>& in) const {
    if (from_ == to_ || in.empty()) return in;
    const auto n_out = static_cast<std::size_t>(std::ceil(static_cast<double>(in.size()) * ratio_));
    const auto n_in = static_cast<std::int64_t>(in.size());
    std::vector<float> out(n_out);
    for (std::size_t n = 0; n < n_out; ++n) {
      const double t = static_cast<double>(n) / ratio_;
      const auto lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(t - half_width_)));
      const auto hi = std::min<std::int64_t>(n_in - 1, static_cast<std::int64_t>(std::floor(t + half_width_)));
      double acc = 0.0;
      for (std::int64_t k = lo; k <= hi; ++k) acc += in[static_cast<std::size_t>(k)] * kernel(t - static_cast<double>(k));
      out[n] = static_cast<float>(acc);
    }
    return out;
  }

private:
  static constexpr int kPerCrossing = 256;

  double kernel(double x) const {
    const double pos = std::abs(x) / step_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= table_.size()) return 0.0;
    const double frac = pos - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

  int from_, to_;
  double ratio_ = 1.0, cutoff_ = 1.0, half_width_ = 1.0, step_ = 1.0;
  std::vector<double> table_;
};

inline Audio resample(const Audio& audio, int to_rate) {
  return Audio{Resampler(audio.sample_rate, to_rate).process(audio.samples), to_rate};
}

}  // namespace cue
