#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cue/dataset.hpp"
#include "cue/error.hpp"
#include "cue/mel.hpp"
#include "cue/tiles.hpp"

namespace cue {

struct EngineConfig {
  int sample_rate = 22050;
  int hop = 512;
  int win = 2048;
  int mel_bands = 128;
  double top_db = 80.0;
  int tile_width = kTileWidth;
  int box_width = 21;
  int stride = kWindowStride;
  int pad = kDefaultPad;
  bool pad_random = false;
  double threshold = 0.9;
  double ap_threshold = 0.5;
  int radius_bars = 16;
  bool radius_override = false;   // permit radius_bars outside {8, 16}
  bool per_track_radius = false;  // radius from each track's own tempo instead of the median
  std::optional<double> median_bpm;
  double split_train = 0.8;
  double split_val = 0.1;
  double split_test = 0.1;
  std::uint64_t seed = 0;
  int batch_size = 16;
  int threads = 0;  // 0 = hardware concurrency

  MelParams mel_params() const {
    MelParams p;
    p.sample_rate = sample_rate;
    p.hop = hop;
    p.n_fft = win;
    p.n_mels = mel_bands;
    p.f_max = sample_rate / 2.0;
    p.top_db = top_db;
    p.threads = static_cast<unsigned>(threads);
    return p;
  }

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;

  SplitRatios split_ratios() const { return {split_train, split_val, split_test}; }

  void validate() const {
    auto positive = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("config: ") + what + " must be positive");
    };
    positive(sample_rate > 0, "sample_rate");
    positive(hop > 0, "hop");
    positive(win > 0, "win");
    positive(mel_bands > 0, "mel_bands");
    positive(top_db > 0, "top_db");
    positive(box_width > 0, "box_width");
    positive(stride > 0, "stride");
    positive(batch_size > 0, "batch_size");
    positive(split_train > 0 && split_val > 0 && split_test > 0, "split ratios");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    if (mel_bands != kTileHeight || tile_width != kTileWidth)
      throw ConfigError("config: the detector contract fixes images at 128 x 355");
    if (stride > tile_width) throw ConfigError("config: stride must not exceed the tile width");
    if (box_width % 2 == 0) throw ConfigError("config: box_width must be odd");
    if (pad < kMinPad || pad > kMaxPad) throw ConfigError("config: pad must lie in [89, 266]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("config: threshold must lie in [0, 1]");
    if (!(ap_threshold >= 0.0 && ap_threshold <= 1.0)) throw ConfigError("config: ap_threshold must lie in [0, 1]");
    if (radius_bars < 0) throw ConfigError("config: radius_bars must be >= 0");
    if (!radius_override && radius_bars != 8 && radius_bars != 16)
      throw ConfigError("config: radius_bars must be 8 or 16 (set radius_override to allow others)");
    if (median_bpm && !(*median_bpm > 0.0)) throw ConfigError("config: median_bpm must be positive");
    if (std::abs(split_train + split_val + split_test - 1.0) > 1e-6)
      throw ConfigError("config: split ratios must sum to 1");
  }
};

namespace detail {

using ConfigValue = std::variant<bool, std::int64_t, double, std::string>;

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline ConfigValue parse_value(const std::string& raw, const std::string& where) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
  const bool integral = raw.find_first_of(".eE") == std::string::npos || raw.find("0x") == 0;
  char* end = nullptr;
  if (integral) {
    const long long v = std::strtoll(raw.c_str(), &end, 10);
    if (end && *end == '\0' && !raw.empty()) return static_cast<std::int64_t>(v);
  }
  const double d = std::strtod(raw.c_str(), &end);
  if (end && *end == '\0' && !raw.empty()) return d;
  throw ConfigError(where + ": cannot parse value '" + raw + "'");
}

}  // namespace detail

/// Reads `key = value` pairs (TOML subset: comments, quoted strings, booleans,
/// numbers, optional [section] headers that prefix keys with "section.").
/// Unknown keys are errors.
inline void apply_config_text(EngineConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const auto v = detail::parse_value(detail::trim(line.substr(eq + 1)), where);

    auto as_double = [&]() -> double {
      if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
      if (auto* d = std::get_if<double>(&v)) return *d;
      throw ConfigError(where + ": '" + key + "' expects a number");
    };
    auto as_int = [&]() -> std::int64_t {
      if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
      throw ConfigError(where + ": '" + key + "' expects an integer");
    };
    auto as_bool = [&]() -> bool {
      if (auto* b = std::get_if<bool>(&v)) return *b;
      throw ConfigError(where + ": '" + key + "' expects true or false");
    };

    if (key == "sample_rate") cfg.sample_rate = static_cast<int>(as_int());
    else if (key == "hop") cfg.hop = static_cast<int>(as_int());
    else if (key == "win") cfg.win = static_cast<int>(as_int());
    else if (key == "mel_bands") cfg.mel_bands = static_cast<int>(as_int());
    else if (key == "top_db") cfg.top_db = as_double();
    else if (key == "tile_width") cfg.tile_width = static_cast<int>(as_int());
    else if (key == "box_width") cfg.box_width = static_cast<int>(as_int());
    else if (key == "stride") cfg.stride = static_cast<int>(as_int());
    else if (key == "pad") cfg.pad = static_cast<int>(as_int());
    else if (key == "pad_random") cfg.pad_random = as_bool();
    else if (key == "threshold") cfg.threshold = as_double();
    else if (key == "ap_threshold") cfg.ap_threshold = as_double();
    else if (key == "radius_bars") cfg.radius_bars = static_cast<int>(as_int());
    else if (key == "radius_override") cfg.radius_override = as_bool();
    else if (key == "per_track_radius") cfg.per_track_radius = as_bool();
    else if (key == "median_bpm") cfg.median_bpm = as_double();
    else if (key == "split.train" || key == "split_train") cfg.split_train = as_double();
    else if (key == "split.val" || key == "split_val") cfg.split_val = as_double();
    else if (key == "split.test" || key == "split_test") cfg.split_test = as_double();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int());
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_int());
    else if (key == "threads") cfg.threads = static_cast<int>(as_int());
    else throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  EngineConfig cfg;
  apply_config_text(cfg, ss.str(), path);
  return cfg;
}

/// Serializes every field; doubles use round-trip precision.
inline std::string to_config_text(const EngineConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "sample_rate = " << c.sample_rate << "\n"
    << "hop = " << c.hop << "\n"
    << "win = " << c.win << "\n"
    << "mel_bands = " << c.mel_bands << "\n"
    << "top_db = " << std::showpoint << c.top_db << std::noshowpoint << "\n"
    << "tile_width = " << c.tile_width << "\n"
    << "box_width = " << c.box_width << "\n"
    << "stride = " << c.stride << "\n"
    << "pad = " << c.pad << "\n"
    << "pad_random = " << b(c.pad_random) << "\n"
    << "threshold = " << std::showpoint << c.threshold << "\n"
    << "ap_threshold = " << c.ap_threshold << std::noshowpoint << "\n"
    << "radius_bars = " << c.radius_bars << "\n"
    << "radius_override = " << b(c.radius_override) << "\n"
    << "per_track_radius = " << b(c.per_track_radius) << "\n";
  if (c.median_bpm) o << "median_bpm = " << std::showpoint << *c.median_bpm << std::noshowpoint << "\n";
  o << "seed = " << c.seed << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "threads = " << c.threads << "\n"
    << "\n[split]\n"
    << std::showpoint << "train = " << c.split_train << "\n"
    << "val = " << c.split_val << "\n"
    << "test = " << c.split_test << "\n";
  return o.str();
}

}  // namespace cue
