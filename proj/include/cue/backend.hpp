#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cue/error.hpp"
#include "cue/image.hpp"
#include "cue/mel.hpp"
#include "cue/tiles.hpp"

namespace cue {

/// Backend sidecar: what the engine needs to know to feed a detector and read its outputs.
struct BackendSpec {
  int version = 1;
  int num_queries = 100;
  int cue_class_index = 0;
  int no_object_index = 1;
  int channels = 3;
  int height = kTileHeight;
  int width = kTileWidth;
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
  nlohmann::json runtime = nlohmann::json::object();  // realization-specific block
  std::filesystem::path base_dir;                     // for resolving relative paths in `runtime`

  static BackendSpec from_json(const nlohmann::json& j, std::filesystem::path base = {}) {
    BackendSpec s;
    try {
      if (j.value("version", 0) != 1) throw BackendError("sidecar: unsupported version");
      s.num_queries = j.at("num_queries").get<int>();
      s.cue_class_index = j.at("cue_class_index").get<int>();
      s.no_object_index = j.at("no_object_index").get<int>();
      const auto& in = j.at("input");
      s.channels = in.at("channels").get<int>();
      s.height = in.at("height").get<int>();
      s.width = in.at("width").get<int>();
      if (j.contains("normalize")) {
        const auto mean = j["normalize"].at("mean").get<std::vector<float>>();
        const auto sd = j["normalize"].at("std").get<std::vector<float>>();
        if (mean.size() != 3 || sd.size() != 3) throw BackendError("sidecar: normalize needs 3 channels");
        std::copy(mean.begin(), mean.end(), s.mean.begin());
        std::copy(sd.begin(), sd.end(), s.std.begin());
      }
      if (j.contains("runtime")) s.runtime = j["runtime"];
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("sidecar: ") + e.what());
    }
    s.base_dir = std::move(base);
    s.validate();
    return s;
  }

  static BackendSpec load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BackendError("cannot open backend sidecar " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
  }

  nlohmann::json to_json() const {
    return {{"version", version},
            {"num_queries", num_queries},
            {"cue_class_index", cue_class_index},
            {"no_object_index", no_object_index},
            {"input", {{"channels", channels}, {"height", height}, {"width", width}}},
            {"normalize", {{"mean", mean}, {"std", std}}},
            {"runtime", runtime}};
  }

  void validate() const {
    if (num_queries <= 0) throw BackendError("sidecar: num_queries must be positive");
    if (channels != 3 || height != kTileHeight || width != kTileWidth)
      throw BackendError("sidecar: input must be 3 x 128 x 355");
    if (cue_class_index < 0 || no_object_index < 0 || cue_class_index == no_object_index)
      throw BackendError("sidecar: class indices must be distinct and non-negative");
    for (float v : std) if (!(v > 0.0f)) throw BackendError("sidecar: normalize std must be positive");
  }
};

/// Channel-planar float tensor, shape 3 x height x width.
struct ImageTensor {
  int height = kTileHeight;
  int width = kTileWidth;
  std::vector<float> data;

  float at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Scales 8-bit pixels to [0, 1], replicates to three channels and standardizes per channel.
inline ImageTensor normalize_image(const GrayImage& img, const BackendSpec& spec = {}) {
  if (img.width != spec.width || img.height != spec.height)
    throw Error("normalize_image: expected a " + std::to_string(spec.height) + " x " + std::to_string(spec.width) +
                " image");
  ImageTensor t{img.height, img.width, std::vector<float>(3 * img.pixels.size())};
  const std::size_t plane = img.pixels.size();
  for (int c = 0; c < 3; ++c) {
    const float mean = spec.mean[c], sd = spec.std[c];
    for (std::size_t i = 0; i < plane; ++i) t.data[c * plane + i] = (img.pixels[i] / 255.0f - mean) / sd;
  }
  return t;
}

/// One query slot: raw class logits and a (cx, cy, w, h) box normalized to the image.
struct QueryPrediction {
  std::vector<float> logits;
  std::array<float, 4> box{};
};

struct BackendOutput {
  std::vector<QueryPrediction> queries;
};

/// Image-in, (logits, boxes)-out detector. Implementations must be pure with
/// respect to their input and preserve batch order.
class DetectorBackend {
public:
  virtual ~DetectorBackend() = default;
  virtual const BackendSpec& spec() const = 0;
  virtual std::vector<BackendOutput> infer(std::span<const ImageTensor> batch) = 0;
};

struct Detection {
  std::int64_t column = 0;  // absolute column in S
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

inline std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += p[i] = std::exp(static_cast<double>(logits[i]) - mx);
  for (auto& v : p) v /= sum;
  return p;
}

/// Maps one window's query slots to absolute spectrogram columns.
/// Queries whose best class is no-object, or that land in padding, are dropped.
inline std::vector<Detection> decode_window(const BackendOutput& out, std::int64_t left_edge, int pad,
                                            std::size_t n_columns, const BackendSpec& spec = {}) {
  std::vector<Detection> dets;
  const auto cue = static_cast<std::size_t>(spec.cue_class_index);
  const auto none = static_cast<std::size_t>(spec.no_object_index);
  for (const auto& q : out.queries) {
    if (q.logits.size() <= std::max(cue, none)) throw BackendError("backend output: too few class logits");
    const auto p = softmax(q.logits);
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (best == none) continue;
    // Corner form x0 = cx - w/2, x1 = cx + w/2; the midpoint is cx, rounded once to a pixel column.
    const double x0 = (q.box[0] - q.box[2] / 2.0) * spec.width;
    const double x1 = (q.box[0] + q.box[2] / 2.0) * spec.width;
    const std::int64_t center_px = std::llround((x0 + x1) / 2.0);
    const std::int64_t column = left_edge + center_px - pad;
    if (column < 0 || column >= static_cast<std::int64_t>(n_columns)) continue;
    dets.push_back({column, p[cue]});
  }
  return dets;
}

/// Position-sorted scores over a full track, one entry per distinct column.
struct ConfidenceTrace {
  std::vector<Detection> entries;
  std::size_t n_columns = 0;
};

/// Concatenates decoded windows; overlapping reports for a column keep the maximum score.
inline ConfidenceTrace accumulate(std::span<const std::vector<Detection>> decoded, std::size_t n_columns = 0) {
  ConfidenceTrace trace;
  trace.n_columns = n_columns;
  for (const auto& d : decoded) trace.entries.insert(trace.entries.end(), d.begin(), d.end());
  std::sort(trace.entries.begin(), trace.entries.end(), [](const Detection& a, const Detection& b) {
    return a.column != b.column ? a.column < b.column : a.score > b.score;
  });
  trace.entries.erase(std::unique(trace.entries.begin(), trace.entries.end(),
                                  [](const Detection& a, const Detection& b) { return a.column == b.column; }),
                      trace.entries.end());
  return trace;
}

/// Runs every inference window through the backend in batches and accumulates the result.
inline ConfidenceTrace detect_track(const MelSpec& s, DetectorBackend& backend, int pad, std::size_t batch_size = 16) {
  if (batch_size == 0) batch_size = 1;
  const auto& spec = backend.spec();
  const auto windows = inference_windows(s, pad);
  std::vector<std::vector<Detection>> decoded(windows.size());
  for (std::size_t b = 0; b < windows.size(); b += batch_size) {
    const std::size_t e = std::min(windows.size(), b + batch_size);
    std::vector<ImageTensor> batch;
    batch.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) batch.push_back(normalize_image(windows[i].image, spec));
    const auto outs = backend.infer(batch);
    if (outs.size() != batch.size()) throw BackendError("backend returned a different batch size");
    for (std::size_t i = b; i < e; ++i)
      decoded[i] = decode_window(outs[i - b], windows[i].left_edge, pad, s.n_columns(), spec);
  }
  return accumulate(decoded, s.n_columns());
}

inline std::string trace_csv(const ConfidenceTrace& trace, int sample_rate = 22050, int hop = 512) {
  std::string out = "column,time_s,score\n";
  char line[96];
  for (const auto& d : trace.entries) {
    std::snprintf(line, sizeof line, "%lld,%.6f,%.9g\n", static_cast<long long>(d.column),
                  column_to_time(static_cast<double>(d.column), sample_rate, hop), d.score);
    out += line;
  }
  return out;
}

inline ConfidenceTrace parse_trace_csv(std::istream& in) {
  ConfidenceTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("column", 0) != 0) throw FormatError("trace csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long long col = 0;
    double t = 0.0, score = 0.0;
    if (std::sscanf(line.c_str(), "%lld,%lf,%lf", &col, &t, &score) != 3)
      throw FormatError("trace csv: malformed line '" + line + "'");
    trace.entries.push_back({col, score});
  }
  return trace;
}

}  // namespace cue
