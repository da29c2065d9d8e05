#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "cue/audio.hpp"
#include "cue/backend.hpp"
#include "cue/config.hpp"
#include "cue/detail/atomic_file.hpp"
#include "cue/mel.hpp"
#include "cue/peaks.hpp"

namespace cue {

/// Left zero-pad for inference: fixed, or drawn from [89, 266] with the config seed.
inline int choose_pad(const EngineConfig& cfg) {
  if (!cfg.pad_random) return cfg.pad;
  std::mt19937_64 rng(cfg.seed);
  return kMinPad + static_cast<int>(rng() % static_cast<std::uint64_t>(kMaxPad - kMinPad + 1));
}

inline std::int64_t peak_radius_columns(const EngineConfig& cfg, std::optional<double> track_bpm) {
  std::optional<double> bpm = cfg.per_track_radius ? track_bpm : cfg.median_bpm;
  if (!bpm) {
    throw ConfigError(cfg.per_track_radius ? "per-track radius needs the track tempo (--bpm)"
                                           : "median_bpm is required to size the peak radius");
  }
  return radius_from_bars(cfg.radius_bars, *bpm, cfg.sample_rate, cfg.hop);
}

struct AnalyzeResult {
  int pad = kDefaultPad;
  std::int64_t radius_columns = 0;
  std::size_t n_columns = 0;
  ConfidenceTrace trace;
  std::vector<CueCandidate> candidates;
};

inline AnalyzeResult analyze_spectrogram(const MelSpec& spec, DetectorBackend& backend, const EngineConfig& cfg,
                                         std::optional<double> track_bpm = std::nullopt) {
  cfg.validate();
  AnalyzeResult r;
  r.pad = choose_pad(cfg);
  r.radius_columns = peak_radius_columns(cfg, track_bpm);
  r.n_columns = spec.n_columns();
  r.trace = detect_track(spec, backend, r.pad, static_cast<std::size_t>(cfg.batch_size));
  r.candidates = select_peaks(r.trace, r.radius_columns, cfg.threshold, cfg.sample_rate, cfg.hop);
  return r;
}

inline AnalyzeResult analyze_audio(const Audio& audio, DetectorBackend& backend, const EngineConfig& cfg,
                                   std::optional<double> track_bpm = std::nullopt) {
  cfg.validate();
  // Peak radius problems are config errors; surface them before the expensive part.
  (void)peak_radius_columns(cfg, track_bpm);
  return analyze_spectrogram(mel_spectrogram(audio, cfg.mel_params()), backend, cfg, track_bpm);
}

inline nlohmann::json candidates_json(const std::string& track, const AnalyzeResult& r, const EngineConfig& cfg) {
  nlohmann::json j;
  j["track"] = track;
  j["pad"] = r.pad;
  j["radius_bars"] = cfg.radius_bars;
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : r.candidates) j["candidates"].push_back({{"time_s", c.time}, {"score", c.score}, {"rank", c.rank}});
  return j;
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace detail

/// Reads WAV natively. Anything else goes through `decode_cmd`, a shell template
/// with {input} and {output} placeholders that must produce a WAV file.
inline Audio load_audio(const std::filesystem::path& path, const std::string& decode_cmd = {}) {
  if (!std::filesystem::exists(path)) throw AudioError("audio file not found: " + path.string());
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".wav" || ext == ".wave" || decode_cmd.empty()) return read_wav(path.string());

  const auto tmp = std::filesystem::temp_directory_path() / detail::temp_sibling("cue-decode.wav").filename();
  const std::string cmd = detail::replace_all(detail::replace_all(decode_cmd, "{input}", detail::shell_quote(path.string())),
                                              "{output}", detail::shell_quote(tmp.string()));
  const int rc = std::system(cmd.c_str());
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  } cleanup{tmp};
  if (rc != 0) throw AudioError("decode command failed for " + path.string());
  return read_wav(tmp.string());
}

}  // namespace cue
