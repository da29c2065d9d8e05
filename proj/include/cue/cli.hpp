#pragma once

// Command-line front end. Lives in a header so tests can drive `run` in-process.
//
// Exit codes: 0 success, 2 unreadable or inconsistent input, 3 backend failure,
// 4 configuration violation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cue/analyze.hpp"
#include "cue/backend_factory.hpp"
#include "cue/config.hpp"
#include "cue/dataset.hpp"
#include "cue/dataset_io.hpp"
#include "cue/detail/atomic_file.hpp"
#include "cue/evalkit.hpp"
#include "cue/inspect.hpp"
#include "cue/phrasing.hpp"
#include "cue/report.hpp"
#include "cue/tile_export.hpp"

namespace cue::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kBackendError = 3, kConfigError = 4 };

namespace fs = std::filesystem;
using nlohmann::json;

struct Overrides {
  std::optional<int> pad;
  bool pad_random = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<double> ap_threshold;
  std::optional<int> radius_bars;
  std::optional<double> median_bpm;
  std::optional<int> box_width;
  std::optional<int> batch_size;
  std::optional<int> threads;
  bool per_track_radius = false;
};

inline EngineConfig resolve_config(const std::string& config_path, const Overrides& o) {
  EngineConfig cfg;
  std::string path = config_path;
  if (path.empty())
    if (const char* env = std::getenv("CUE_ENGINE_CONFIG")) path = env;
  if (!path.empty()) cfg = load_config(path);
  if (o.pad) cfg.pad = *o.pad;
  if (o.pad_random) cfg.pad_random = true;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threshold) cfg.threshold = *o.threshold;
  if (o.ap_threshold) cfg.ap_threshold = *o.ap_threshold;
  if (o.radius_bars) cfg.radius_bars = *o.radius_bars;
  if (o.median_bpm) cfg.median_bpm = *o.median_bpm;
  if (o.box_width) cfg.box_width = *o.box_width;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.threads) cfg.threads = *o.threads;
  if (o.per_track_radius) cfg.per_track_radius = true;
  cfg.validate();
  return cfg;
}

inline void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  detail::write_file_atomically(path, j.dump(2) + "\n");
}

inline std::map<std::string, const TrackRecord*> index_by_key(const std::vector<TrackRecord>& records) {
  std::map<std::string, const TrackRecord*> idx;
  for (const auto& r : records) idx[TrackKey::normalize(r.key.str())] = &r;
  return idx;
}

inline const TrackRecord* find_track(const std::map<std::string, const TrackRecord*>& idx, const std::string& key) {
  const auto it = idx.find(TrackKey::normalize(key));
  return it == idx.end() ? nullptr : it->second;
}

/// Prediction file: {"track", "predictions": [{"time_s", "score"?}]} or an analyze
/// candidates file. Missing scores become rank-descending values just below 1.
inline std::pair<std::string, std::vector<TimedPrediction>> parse_predictions(const json& doc) {
  if (!doc.contains("track")) throw FormatError("prediction file: missing 'track'");
  const auto& list = doc.contains("predictions") ? doc["predictions"] : doc.at("candidates");
  std::vector<TimedPrediction> preds;
  std::size_t rank = 0;
  for (const auto& p : list) {
    TimedPrediction tp;
    tp.time = p.at("time_s").get<double>();
    tp.score = p.contains("score") && !p["score"].is_null() ? p["score"].get<double>() : 1.0 - 1e-6 * static_cast<double>(rank);
    ++rank;
    preds.push_back(tp);
  }
  return {doc["track"].get<std::string>(), preds};
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string split_out;
  bool skip_invalid = false;
};

inline int cmd_ingest(const IngestArgs& a, const EngineConfig& cfg, std::ostream& log = std::cerr) {
  std::vector<CollectionEntry> entries;
  std::vector<std::string> skipped;
  for (const auto& in : a.inputs) {
    auto e = parse_collection(read_json_file(in), a.skip_invalid ? &skipped : nullptr);
    entries.insert(entries.end(), e.begin(), e.end());
  }
  for (const auto& s : skipped) log << "skipped: " << s << "\n";
  const auto records = merge_collections(entries);
  for (const auto& r : records)
    if (r.bpm_spread_flagged())
      log << "warning: '" << r.key.str() << "' bpm spread " << r.bpm_spread << " across collections\n";
  write_json(a.output, merged_dataset_json(records));
  if (!a.split_out.empty()) write_json(a.split_out, to_json(split_dataset(records, cfg.split_ratios(), cfg.seed)));
  log << "merged " << entries.size() << " entries into " << records.size() << " tracks\n";
  return kOk;
}

inline int cmd_stats(const std::string& dataset, const std::string& output, std::ostream& log = std::cerr) {
  const auto records = parse_merged_dataset(read_json_file(dataset));
  const auto s = corpus_stats(records);
  write_json(output, to_json(s));
  if (!output.empty() && output != "-")
    log << s.track_count << " tracks, " << s.cue_count << " cues, " << s.mean_cues_per_track << " cues/track\n";
  return kOk;
}

struct PhraseArgs {
  std::string input;
  std::string output;
  std::optional<int> length;
  std::optional<double> duration;
  std::vector<double> cues;
};

inline int cmd_phrase(const PhraseArgs& a) {
  PhraseSpec spec;
  if (!a.input.empty()) {
    const auto j = read_json_file(a.input);
    try {
      spec.phrase_len = j.at("phrase_len").get<int>();
      spec.duration = j.at("duration").get<double>();
      spec.cues = j.at("cues").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw FormatError(a.input + ": " + e.what());
    }
  }
  if (a.length) spec.phrase_len = *a.length;
  if (a.duration) spec.duration = *a.duration;
  if (!a.cues.empty()) spec.cues = a.cues;
  PhraseBoundaries b;
  try {
    b = phrase_boundaries(spec);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  json out{{"phrase_len", spec.phrase_len}, {"duration", spec.duration}, {"cues", spec.cues}, {"boundaries", json::array()}};
  for (double v : b.boundaries) {
    if (v == std::floor(v)) out["boundaries"].push_back(static_cast<std::int64_t>(v));
    else out["boundaries"].push_back(v);
  }
  write_json(a.output, out);
  return kOk;
}

struct TilesArgs {
  std::string dataset;
  std::string audio_map;
  std::string split;
  std::string subset = "train";
  std::string out_dir;
  std::string decode_cmd;
};

inline int cmd_tiles(const TilesArgs& a, const EngineConfig& cfg, std::ostream& log = std::cerr) {
  const auto records = parse_merged_dataset(read_json_file(a.dataset));
  const auto idx = index_by_key(records);
  const auto amap = read_json_file(a.audio_map);
  const fs::path map_dir = fs::path(a.audio_map).parent_path();

  std::vector<std::string> keys;
  if (a.split.empty() || a.subset == "all") {
    for (const auto& r : records) keys.push_back(r.key.str());
  } else {
    const auto split = read_json_file(a.split);
    if (!split.contains(a.subset)) throw FormatError("split file has no subset '" + a.subset + "'");
    keys = split[a.subset].get<std::vector<std::string>>();
  }

  std::vector<TileJob> jobs;
  for (const auto& k : keys) {
    const TrackRecord* r = find_track(idx, k);
    if (!r) throw FormatError("unknown track '" + k + "'");
    std::optional<std::string> path;
    for (const auto& [mk, mv] : amap.items())
      if (TrackKey::normalize(mk) == TrackKey::normalize(r->key.str())) path = mv.get<std::string>();
    if (!path) throw FormatError("no audio for track '" + k + "' in " + a.audio_map);
    fs::path p(*path);
    if (p.is_relative()) p = map_dir / p;
    jobs.push_back({r, p});
  }
  const auto summary = export_tiles(jobs, cfg, a.out_dir, a.decode_cmd);
  log << "wrote " << summary.images << " tiles, " << summary.annotations << " boxes to " << a.out_dir << "\n";
  return kOk;
}

struct AnalyzeArgs {
  std::string audio;
  std::string backend;
  std::string output;
  std::string trace;
  std::string track;
  std::optional<double> bpm;
  std::string decode_cmd;
};

inline int cmd_analyze(const AnalyzeArgs& a, const EngineConfig& cfg) {
  (void)peak_radius_columns(cfg, a.bpm);
  const Audio audio = load_audio(a.audio, a.decode_cmd);
  if (audio.samples.empty()) throw AudioError(a.audio + ": no audio samples");
  const auto backend = load_backend(a.backend);
  const auto result = analyze_audio(audio, *backend, cfg, a.bpm);
  const std::string track = a.track.empty() ? fs::path(a.audio).stem().string() : a.track;
  write_json(a.output, candidates_json(track, result, cfg));
  if (!a.trace.empty()) detail::write_file_atomically(a.trace, trace_csv(result.trace, cfg.sample_rate, cfg.hop));
  return kOk;
}

struct EvalArgs {
  std::string dataset;
  std::vector<std::string> predictions;  // [NAME=]DIR
  std::string output;
  std::string table;
  std::string split;
  std::string subset = "test";
  bool allow_missing = false;
  std::size_t n_bars_cap = 256;
};

inline int cmd_eval(const EvalArgs& a, const EngineConfig& cfg, std::ostream& log = std::cerr) {
  const auto records = parse_merged_dataset(read_json_file(a.dataset));
  const auto idx = index_by_key(records);
  EvalOptions opt{cfg.threshold, cfg.ap_threshold, a.n_bars_cap};

  std::vector<std::string> required;
  if (!a.split.empty()) required = read_json_file(a.split).at(a.subset).get<std::vector<std::string>>();

  std::vector<MethodReport> reports;
  std::vector<std::string> unknown;
  for (const auto& spec : a.predictions) {
    const auto eq = spec.find('=');
    const std::string dir = eq == std::string::npos ? spec : spec.substr(eq + 1);
    std::string method = eq == std::string::npos ? fs::path(dir).filename().string() : spec.substr(0, eq);
    if (method.empty()) method = dir;
    if (!fs::is_directory(dir)) throw FormatError("prediction directory not found: " + dir);

    std::map<const TrackRecord*, std::vector<TimedPrediction>> by_track;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto [key, preds] = parse_predictions(read_json_file(f.string()));
      const TrackRecord* r = find_track(idx, key);
      if (!r) {
        unknown.push_back(method + ": " + key + " (" + f.filename().string() + ")");
        continue;
      }
      auto& slot = by_track[r];
      slot.insert(slot.end(), preds.begin(), preds.end());
    }
    for (const auto& k : required)
      if (const TrackRecord* r = find_track(idx, k)) by_track.try_emplace(r);

    std::vector<TrackPredictions> tracks;
    for (auto& [r, preds] : by_track) tracks.push_back({r, std::move(preds)});
    std::sort(tracks.begin(), tracks.end(), [](const auto& x, const auto& y) { return x.track->key < y.track->key; });
    reports.push_back(evaluate_method(method, tracks, opt));
  }

  for (const auto& u : unknown) log << "unknown track, skipped: " << u << "\n";
  write_json(a.output, report_json(reports, opt));
  const std::string table = report_table(reports);
  if (!a.table.empty()) detail::write_file_atomically(a.table, table);
  else log << table;
  return unknown.empty() || a.allow_missing ? kOk : kInputError;
}

struct InspectArgs {
  std::string trace;
  std::string candidates;
  std::string audio;
  std::string dataset;
  std::string track;
  std::string output;
  std::string decode_cmd;
};

inline int cmd_inspect(const InspectArgs& a, const EngineConfig& cfg) {
  if (!fs::exists(a.trace)) throw FormatError("trace not found: " + a.trace);
  InspectInput in;
  in.sample_rate = cfg.sample_rate;
  in.hop = cfg.hop;
  in.top_db = cfg.top_db;
  {
    std::ifstream f(a.trace);
    in.trace = parse_trace_csv(f);
  }
  std::string track = a.track;
  if (!a.candidates.empty()) {
    const auto c = read_json_file(a.candidates);
    for (const auto& p : c.at("candidates")) in.predictions.push_back(p.at("time_s").get<double>());
    if (track.empty()) track = c.value("track", std::string{});
  }
  std::optional<MelSpec> mel;
  if (!a.audio.empty()) {
    mel = mel_spectrogram(load_audio(a.audio, a.decode_cmd), cfg.mel_params());
    in.spectrogram = &*mel;
  }
  std::vector<TrackRecord> records;
  if (!a.dataset.empty()) {
    records = parse_merged_dataset(read_json_file(a.dataset));
    const auto idx = index_by_key(records);
    in.truth = find_track(idx, track);
    if (!in.truth) throw FormatError("track '" + track + "' not in dataset");
    in.n_columns = static_cast<std::size_t>(std::max<std::int64_t>(1, time_to_column(in.truth->duration, cfg.sample_rate, cfg.hop)));
  }

  const auto render = render_inspection(in);
  fs::path png(a.output);
  detail::write_atomically(png, [&](const fs::path& tmp) { write_png(tmp.string(), render.image); });
  auto manifest = render.manifest();
  manifest["track"] = track;
  manifest["image"] = png.filename().string();
  detail::write_file_atomically(fs::path(png).replace_extension(".json"), manifest.dump(2) + "\n");
  detail::write_file_atomically(fs::path(png).replace_extension(".csv"), trace_csv(in.trace, cfg.sample_rate, cfg.hop));
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"cue-engine: cue point estimation for electronic dance music"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "Config file (default: $CUE_ENGINE_CONFIG)");

  auto add_overrides = [&](CLI::App* sub, bool analysis) {
    sub->add_option("--seed", ov.seed, "Random seed");
    sub->add_option("--threads", ov.threads, "Worker threads (0 = all cores)");
    if (analysis) {
      sub->add_option("--pad", ov.pad, "Left zero-pad in columns [89, 266]");
      sub->add_flag("--pad-random", ov.pad_random, "Draw the pad from [89, 266] using the seed");
      sub->add_option("--threshold", ov.threshold, "Minimum candidate confidence");
      sub->add_option("--radius-bars", ov.radius_bars, "Peak radius in bars (8 or 16)");
      sub->add_option("--median-bpm", ov.median_bpm, "Dataset median tempo used to size the radius");
      sub->add_flag("--per-track-radius", ov.per_track_radius, "Size the radius from the track tempo (--bpm)");
      sub->add_option("--batch-size", ov.batch_size, "Backend batch size");
    }
  };

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Merge collection exports into one dataset");
  c_ingest->add_option("collections", ingest.inputs, "Collection JSON files")->required();
  c_ingest->add_option("-o,--output", ingest.output, "Merged dataset JSON")->required();
  c_ingest->add_option("--split-out", ingest.split_out, "Also write a train/val/test split");
  c_ingest->add_flag("--skip-invalid", ingest.skip_invalid, "Drop invalid tracks instead of failing");
  add_overrides(c_ingest, false);

  std::string stats_dataset, stats_out;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics and cue histograms");
  c_stats->add_option("--dataset", stats_dataset, "Merged dataset JSON")->required();
  c_stats->add_option("-o,--output", stats_out, "Output JSON (default stdout)");

  PhraseArgs phrase;
  auto* c_phrase = app.add_subcommand("phrase", "Phrase boundaries from cues (bar units)");
  c_phrase->add_option("input", phrase.input, "JSON {phrase_len, duration, cues}");
  c_phrase->add_option("-o,--output", phrase.output, "Output JSON (default stdout)");
  c_phrase->add_option("--length", phrase.length, "Phrase length in bars");
  c_phrase->add_option("--duration", phrase.duration, "Track duration in bars");
  c_phrase->add_option("--cues", phrase.cues, "Cue positions in bars")->delimiter(',');

  TilesArgs tiles;
  auto* c_tiles = app.add_subcommand("tiles", "Export training tiles and annotations");
  c_tiles->add_option("--dataset", tiles.dataset, "Merged dataset JSON")->required();
  c_tiles->add_option("--audio-map", tiles.audio_map, "JSON object: track key -> audio path")->required();
  c_tiles->add_option("--split", tiles.split, "Split JSON from ingest --split-out");
  c_tiles->add_option("--subset", tiles.subset, "train, val, test or all");
  c_tiles->add_option("-o,--output", tiles.out_dir, "Output directory")->required();
  c_tiles->add_option("--decode-cmd", tiles.decode_cmd, "Decoder template with {input} and {output}");
  c_tiles->add_option("--box-width", ov.box_width, "Box width in pixels");
  add_overrides(c_tiles, false);

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Estimate cue points for one audio file");
  c_analyze->add_option("audio", analyze.audio, "Audio file (WAV, or any format via --decode-cmd)")->required();
  c_analyze->add_option("--backend", analyze.backend, "Backend sidecar JSON")->required();
  c_analyze->add_option("-o,--output", analyze.output, "Candidates JSON (default stdout)");
  c_analyze->add_option("--trace", analyze.trace, "Also write the confidence trace CSV");
  c_analyze->add_option("--track", analyze.track, "Track key written to the output");
  c_analyze->add_option("--bpm", analyze.bpm, "Track tempo (for --per-track-radius)");
  c_analyze->add_option("--decode-cmd", analyze.decode_cmd, "Decoder template with {input} and {output}");
  add_overrides(c_analyze, true);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate predictions against the dataset");
  c_eval->add_option("--dataset", ev.dataset, "Merged dataset JSON")->required();
  c_eval->add_option("--predictions", ev.predictions, "[NAME=]DIR of prediction JSON files")->required();
  c_eval->add_option("-o,--output", ev.output, "Report JSON (default stdout)");
  c_eval->add_option("--table", ev.table, "Write the text table here (default stderr)");
  c_eval->add_option("--split", ev.split, "Split JSON; tracks of --subset without predictions count as misses");
  c_eval->add_option("--subset", ev.subset, "Subset of --split to require");
  c_eval->add_option("--bars-cap", ev.n_bars_cap, "Highest bar index in the position histogram");
  c_eval->add_flag("--allow-missing", ev.allow_missing, "Exit 0 even when prediction files name unknown tracks");
  c_eval->add_option("--threshold", ov.threshold, "Operating confidence threshold");
  c_eval->add_option("--ap-threshold", ov.ap_threshold, "Lowest score included in the AP sweep");

  InspectArgs insp;
  auto* c_inspect = app.add_subcommand("inspect", "Render spectrogram, confidence curve and markers");
  c_inspect->add_option("--trace", insp.trace, "Trace CSV from analyze --trace")->required();
  c_inspect->add_option("--candidates", insp.candidates, "Candidates JSON");
  c_inspect->add_option("--audio", insp.audio, "Audio file for the background spectrogram");
  c_inspect->add_option("--dataset", insp.dataset, "Merged dataset for ground truth markers");
  c_inspect->add_option("--track", insp.track, "Track key (default: from candidates)");
  c_inspect->add_option("-o,--output", insp.output, "Output PNG; .json manifest and .csv are written beside it")->required();
  c_inspect->add_option("--decode-cmd", insp.decode_cmd, "Decoder template with {input} and {output}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, errs;
    const int rc = app.exit(e, out, errs);
    std::cout << out.str();
    err << errs.str();
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (c_stats->parsed()) return cmd_stats(stats_dataset, stats_out, err);
    if (c_phrase->parsed()) return cmd_phrase(phrase);
    const EngineConfig cfg = resolve_config(config_path, ov);
    if (c_ingest->parsed()) return cmd_ingest(ingest, cfg, err);
    if (c_tiles->parsed()) return cmd_tiles(tiles, cfg, err);
    if (c_analyze->parsed()) return cmd_analyze(analyze, cfg);
    if (c_eval->parsed()) return cmd_eval(ev, cfg, err);
    if (c_inspect->parsed()) return cmd_inspect(insp, cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackendError;
  } catch (const AudioError& e) {
    err << "audio error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kConfigError;
}

}  // namespace cue::cli
