#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cue/dataset.hpp"
#include "cue/error.hpp"

namespace cue {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

namespace detail {

template <typename T>
T require(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field)) throw FormatError(where + ": missing field '" + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + field + "' has the wrong type");
  }
}

inline std::optional<std::string> optional_string(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return j.at(field).get<std::string>();
}

}  // namespace detail

/// Parses one collection interchange document. Entries are validated; the
/// first violation raises FormatError unless `skipped` is given, in which case
/// invalid tracks are dropped and their diagnostics appended there.
inline std::vector<CollectionEntry> parse_collection(const json& doc, std::vector<std::string>* skipped = nullptr) {
  if (!doc.is_object() || !doc.contains("tracks") || !doc["tracks"].is_array())
    throw FormatError("collection: expected an object with a 'tracks' array");
  const std::string name = doc.value("collection", std::string{});
  std::vector<CollectionEntry> out;
  std::size_t i = 0;
  for (const auto& t : doc["tracks"]) {
    const std::string where = "collection '" + name + "' track " + std::to_string(i++);
    CollectionEntry e;
    e.key = TrackKey::make(detail::require<std::string>(t, "artist", where),
                           detail::require<std::string>(t, "title", where));
    e.bpm = detail::require<double>(t, "bpm", where);
    e.grid_offset = detail::require<double>(t, "grid_offset_s", where);
    e.beats_per_bar = t.value("beats_per_bar", 4);
    e.first_beat_number = t.value("first_beat_number", 1);
    e.duration = detail::require<double>(t, "duration_s", where);
    e.cues = detail::require<std::vector<double>>(t, "cues_s", where);
    std::sort(e.cues.begin(), e.cues.end());
    e.external_id = detail::optional_string(t, "external_id");
    e.collection = name;
    try {
      validate_entry(e);
    } catch (const FormatError& err) {
      if (!skipped) throw;
      skipped->push_back(where + ": " + err.what());
      continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline json to_json(const TrackRecord& r) {
  json t;
  t["artist"] = r.key.artist;
  t["title"] = r.key.title;
  t["bpm"] = r.grid.bpm();
  t["grid_offset_s"] = r.grid.offset();
  t["beats_per_bar"] = r.grid.beats_per_bar();
  t["first_beat_number"] = r.grid.first_beat_number();
  t["duration_s"] = r.duration;
  t["cues_s"] = r.cues;
  t["external_id"] = r.external_id ? json(*r.external_id) : json(nullptr);
  t["source_count"] = r.source_count;
  if (r.bpm_spread_flagged()) t["bpm_spread"] = r.bpm_spread;
  return t;
}

inline json merged_dataset_json(const std::vector<TrackRecord>& records, const std::string& name = "merged") {
  json doc;
  doc["version"] = 1;
  doc["collection"] = name;
  doc["tracks"] = json::array();
  for (const auto& r : records) doc["tracks"].push_back(to_json(r));
  return doc;
}

inline std::vector<TrackRecord> parse_merged_dataset(const json& doc) {
  if (!doc.is_object() || doc.value("version", 0) != 1)
    throw FormatError("merged dataset: expected version 1 document");
  std::vector<TrackRecord> out;
  std::size_t i = 0;
  for (const auto& t : doc.at("tracks")) {
    const std::string where = "merged dataset track " + std::to_string(i++);
    TrackRecord r;
    r.key = TrackKey::make(detail::require<std::string>(t, "artist", where),
                           detail::require<std::string>(t, "title", where));
    try {
      r.grid = BeatGrid(detail::require<double>(t, "bpm", where), detail::require<double>(t, "grid_offset_s", where),
                        t.value("beats_per_bar", 4), t.value("first_beat_number", 1));
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
    r.duration = detail::require<double>(t, "duration_s", where);
    r.cues = detail::require<std::vector<double>>(t, "cues_s", where);
    std::sort(r.cues.begin(), r.cues.end());
    r.external_id = detail::optional_string(t, "external_id");
    r.source_count = t.value("source_count", 1);
    r.bpm_spread = t.value("bpm_spread", 0.0);
    out.push_back(std::move(r));
  }
  return out;
}

inline json to_json(const CorpusStats& s) {
  json j;
  j["track_count"] = s.track_count;
  j["cue_count"] = s.cue_count;
  j["mean_cues_per_track"] = s.mean_cues_per_track;
  auto hist = [](const std::map<std::int64_t, std::size_t>& h) {
    json a = json::object();
    for (const auto& [bar, n] : h) a[std::to_string(bar)] = n;
    return a;
  };
  j["cue_position_bars"] = hist(s.cue_position_bars);
  j["inter_cue_distance_bars"] = hist(s.inter_cue_distance_bars);
  return j;
}

inline json to_json(const DatasetSplit& s) {
  auto keys = [](const std::vector<TrackKey>& ks) {
    json a = json::array();
    for (const auto& k : ks) a.push_back(k.str());
    return a;
  };
  auto index = [](const std::vector<CueIndexEntry>& idx) {
    json a = json::array();
    for (const auto& e : idx) a.push_back({{"track", e.key.str()}, {"cue_index", e.cue_index}, {"time_s", e.cue_time}});
    return a;
  };
  return {{"train", keys(s.train)},
          {"val", keys(s.val)},
          {"test", keys(s.test)},
          {"train_index", index(s.train_index)},
          {"val_index", index(s.val_index)}};
}

}  // namespace cue
