// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cue/cli.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace cue;

namespace {

// Collects the first few failed expectations of one criterion.
class Check {
public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++failed_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::abs(got - want) <= tol, s.str());
  }
  bool ok() const { return failed_ == 0; }
  std::size_t checks() const { return checks_; }
  const std::vector<std::string>& failures() const { return failures_; }

private:
  std::size_t checks_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
};

int g_failed = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0 && secs >= time_limit_s) {
    std::ostringstream s;
    s << "took " << secs << " s, limit " << time_limit_s << " s";
    c.expect(false, s.str());
  }
  std::printf("%s  %-28s %6zu checks  %7.3f s\n", c.ok() ? "PASS" : "FAIL", name.c_str(), c.checks(), secs);
  for (const auto& f : c.failures()) std::printf("        %s\n", f.c_str());
  std::fflush(stdout);
  if (!c.ok()) ++g_failed;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / ("cue_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------------------

void phrasing(Check& c) {
  auto run = [](int len, double t, std::vector<double> cues) { return phrase_boundaries({len, t, std::move(cues)}).boundaries; };
  c.expect(run(16, 32, {0}) == std::vector<double>{0, 16}, "l=16 t=32 C={0}");
  c.expect(run(16, 80, {16, 48}) == std::vector<double>{0, 16, 32, 48, 64}, "l=16 t=80 C={16,48}");
  c.expect(run(16, 50, {4, 14}) == std::vector<double>{4, 14, 30, 46}, "l=16 t=50 C={4,14}");

  std::mt19937_64 rng(1);
  const int lens[] = {4, 8, 16};
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = lens[rng() % 3];
    const int t = 1 + static_cast<int>(rng() % 200);
    std::set<int> cs;
    const auto k = 1 + rng() % 6;
    for (std::uint64_t i = 0; i < k; ++i) cs.insert(static_cast<int>(rng() % t));
    const std::vector<int> cues(cs.begin(), cs.end());
    const auto got = run(len, t, {cues.begin(), cues.end()});
    const auto ref = oracle::phrase_boundaries(len, t, cues);
    c.expect(got == std::vector<double>(ref.begin(), ref.end()),
             "random input l=" + std::to_string(len) + " t=" + std::to_string(t) + " got {" + join(got) + "}");
  }
}

void cue_merge(Check& c) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const BeatGrid g(std::uniform_real_distribution<double>(90, 180)(rng), 0.0);
    const double thr = g.beat_duration() / 4;
    std::vector<double> cues(rng() % 51);
    for (auto& x : cues) x = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
    const auto merged = merge_cues(cues, g);
    c.expect(merge_cues(merged, g) == merged, "idempotence, trial " + std::to_string(trial));
    c.expect(merged == oracle::merge_cues(cues, thr), "chain oracle, trial " + std::to_string(trial));

    // Midpoints sit inside their own chain's extent.
    std::vector<double> sorted = cues;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> chains;
    for (double x : sorted) {
      if (chains.empty() || x - chains.back().second > thr) chains.push_back({x, x});
      else chains.back().second = x;
    }
    c.expect(chains.size() == merged.size(), "one output per chain, trial " + std::to_string(trial));
    for (std::size_t i = 0; i < std::min(chains.size(), merged.size()); ++i)
      c.expect(chains[i].first <= merged[i] && merged[i] <= chains[i].second, "midpoint within extent");
  }
}

ConfidenceTrace random_trace(std::mt19937_64& rng) {
  const auto len = 1 + rng() % 4000;
  std::vector<Detection> e(rng() % 201);
  for (auto& d : e) d = {static_cast<std::int64_t>(rng() % len), static_cast<double>(rng() % 41) / 40.0};
  std::vector<std::vector<Detection>> one{e};
  return accumulate(one, len);
}

void peak_selection(Check& c) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = random_trace(rng);
    const auto radius = static_cast<std::int64_t>(rng() % 300);
    const double thr = static_cast<double>(rng() % 11) / 10.0;
    std::vector<oracle::Entry> entries;
    for (const auto& d : t.entries) entries.push_back({d.column, d.score});
    const auto got = select_peaks(t, radius, thr);
    std::vector<std::int64_t> cols;
    for (const auto& p : got) cols.push_back(p.column);
    c.expect(cols == oracle::select_peaks(entries, radius, thr), "oracle parity, trial " + std::to_string(trial));
    for (std::size_t i = 1; i < got.size(); ++i) c.expect(got[i].column - got[i - 1].column > radius, "strict radius");

    // Raising the threshold only drops picks; the survivors are those already above it.
    const double hi = std::min(1.0, thr + 0.25);
    std::vector<std::int64_t> kept;
    for (const auto& p : got)
      if (p.score >= hi) kept.push_back(p.column);
    std::vector<std::int64_t> high;
    for (const auto& p : select_peaks(t, radius, hi)) high.push_back(p.column);
    c.expect(high == kept, "threshold monotonicity, trial " + std::to_string(trial));
  }
}

void end_to_end(Check& c) {
  const fs::path dir = scratch_dir();
  const std::vector<std::int64_t> plants{40, 900, 1800, 2950, 4100, 5200, 6300, 7700};
  const auto wav = (dir / "synthetic.wav").string();
  write_wav16(wav, synth::marker_track(180.0, plants, 17));
  const auto sidecar = (dir / "oracle.json").string();
  std::ofstream(sidecar) << nlohmann::json{{"version", 1},
                                           {"num_queries", 100},
                                           {"cue_class_index", 0},
                                           {"no_object_index", 1},
                                           {"input", {{"channels", 3}, {"height", 128}, {"width", 355}}},
                                           {"runtime", {{"kind", "oracle"}, {"mode", "marker"}}}}
                                .dump();

  auto verify = [&](const fs::path& out, const fs::path& trace, const std::string& label) {
    std::ifstream in(out);
    const auto doc = nlohmann::json::parse(in);
    std::vector<bool> found(plants.size(), false);
    for (const auto& cand : doc.at("candidates")) {
      const double col = cand.at("time_s").get<double>() * 22050.0 / 512.0;
      bool hit = false;
      for (std::size_t i = 0; i < plants.size(); ++i)
        if (std::abs(col - static_cast<double>(plants[i])) <= 1.0 + 1e-6) found[i] = hit = true;
      c.expect(hit || cand.at("score").get<double>() < 0.9,
               label + ": false positive at column " + std::to_string(col));
    }
    for (std::size_t i = 0; i < plants.size(); ++i)
      c.expect(found[i], label + ": plant " + std::to_string(plants[i]) + " not recovered");
    c.expect(doc.at("candidates").size() == plants.size(), label + ": candidate count");

    std::ifstream tf(trace);
    const auto tr = parse_trace_csv(tf);
    for (const auto& d : tr.entries) {
      if (d.score < 0.9) continue;
      bool near_plant = false;
      for (auto p : plants) near_plant |= std::llabs(d.column - p) <= 1;
      c.expect(near_plant, label + ": trace fires >= 0.9 at column " + std::to_string(d.column));
    }
  };

  for (int pad : {89, 177, 266}) {
    const auto out = dir / ("cands_" + std::to_string(pad) + ".json");
    const auto trace = dir / ("trace_" + std::to_string(pad) + ".csv");
    const std::string pad_s = std::to_string(pad);
    const std::vector<std::string> args{"cue-engine", "analyze", wav, "--backend", sidecar, "--pad", pad_s,
                                        "--median-bpm", "120", "--radius-bars", "8", "-o", out.string(),
                                        "--trace", trace.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream err;
    const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), err);
    c.expect(rc == 0, "analyze pad=" + pad_s + " exit " + std::to_string(rc) + ": " + err.str());
    if (rc == 0) verify(out, trace, "pad " + pad_s);
  }

  // Same run through the installed executable.
  const auto out = dir / "cands_bin.json";
  const auto trace = dir / "trace_bin.csv";
  const std::string cmd = std::string("'") + CUE_ENGINE_BIN + "' analyze '" + wav + "' --backend '" + sidecar +
                          "' --median-bpm 120 --radius-bars 8 -o '" + out.string() + "' --trace '" + trace.string() +
                          "'";
  const int rc = std::system(cmd.c_str());
  c.expect(rc == 0, "cue-engine executable exit " + std::to_string(rc));
  if (rc == 0) verify(out, trace, "executable");
  fs::remove_all(dir);
}

void metrics(Check& c) {
  auto m = match({{10.0, 0.99}}, {10.1}, 0.25);
  c.expect(m.counts.tp == 1 && m.counts.fp == 0 && m.counts.fn == 0, "single hit");
  m = match({{10.0, 0.99}, {10.2, 0.95}}, {10.1}, 0.25);
  c.expect(m.counts.tp == 1 && m.counts.fp == 1, "one-to-one");
  m = match({}, {5.0}, 0.25);
  c.expect(m.counts.fn == 1 && prf(m.counts).precision == 0.0, "empty predictions");

  const auto p = prf({3, 1, 2});
  c.near(p.precision, 0.75, 1e-9, "P");
  c.near(p.recall, 0.6, 1e-9, "R");
  c.near(p.f1, 2.0 * 0.45 / 1.35, 1e-9, "F1");
  const auto zero = prf({0, 0, 3});
  c.expect(zero.precision == 0 && zero.recall == 0 && zero.f1 == 0, "zero predictions");
  const auto perfect = prf({4, 0, 0});
  c.expect(perfect.precision == 1 && perfect.recall == 1 && perfect.f1 == 1, "perfect predictions");

  c.near(average_precision({{0.9, true}}, 1), 1.0, 1e-9, "AP single hit");
  c.near(average_precision({{0.9, true}, {0.8, false}, {0.7, true}}, 2), (1.0 + 2.0 / 3.0) / 2.0, 1e-9,
         "AP [TP,FP,TP]");
  c.near(average_precision({{0.9, false}, {0.8, false}}, 2), 0.0, 1e-9, "AP all FP");

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<RankedLabel> ranked;
    std::vector<bool> labels;
    std::size_t tps = 0;
    for (std::size_t i = 0, n = rng() % 101; i < n; ++i) {
      const bool tp = rng() % 2;
      ranked.push_back({1.0 - 1e-3 * static_cast<double>(i), tp});
      labels.push_back(tp);
      tps += tp;
    }
    const std::size_t truth = tps + rng() % 5;
    c.near(average_precision(ranked, truth), oracle::average_precision(labels, truth), 1e-9, "AP brute force");
  }

  // Half-beat windows never score above one-beat windows.
  for (int corpus = 0; corpus < 200; ++corpus) {
    std::vector<TrackRecord> records(1 + rng() % 5);
    for (auto& r : records) {
      r.grid = BeatGrid(std::uniform_real_distribution<double>(110, 140)(rng), 0.0);
      r.duration = 240.0;
      for (int i = 0, n = 1 + static_cast<int>(rng() % 6); i < n; ++i)
        r.cues.push_back(r.grid.bar_start_time(static_cast<double>(rng() % 100)));
      std::sort(r.cues.begin(), r.cues.end());
      r.cues.erase(std::unique(r.cues.begin(), r.cues.end()), r.cues.end());
    }
    std::vector<TrackPredictions> tracks;
    for (const auto& r : records) {
      TrackPredictions tp{&r, {}};
      for (int i = 0, n = static_cast<int>(rng() % 10); i < n; ++i) {
        const double base = r.cues[rng() % r.cues.size()];
        tp.predictions.push_back({base + std::uniform_real_distribution<double>(-0.6, 0.6)(rng),
                                  static_cast<double>(rng() % 11) / 10.0});
      }
      tracks.push_back(std::move(tp));
    }
    const auto rep = evaluate_method("random", tracks, {0.0, 0.0, 256});
    for (TruthKind k : kTruthKinds) {
      const auto& one = rep.at(Tolerance::one_beat, k);
      const auto& half = rep.at(Tolerance::half_beat, k);
      c.expect(half.counts.tp <= one.counts.tp, "T1/2 TP <= T1 TP");
      c.expect(half.micro.f1 <= one.micro.f1 + 1e-12, "T1/2 F1 <= T1 F1");
      c.expect(half.micro.precision <= one.micro.precision + 1e-12, "T1/2 P <= T1 P");
      c.expect(half.micro.recall <= one.micro.recall + 1e-12, "T1/2 R <= T1 R");
    }
  }

  c.near(cosine_similarity({2, 0, 1}, {2, 0, 1}), 1.0, 1e-9, "cosine identical");
  c.near(cosine_similarity({1, 0, 0}, {0, 0, 5}), 0.0, 1e-9, "cosine disjoint");
  BarHistogram hp(17, 0.0), ht(17, 0.0);
  hp[0] = hp[16] = 1;
  ht[0] = 2;
  c.near(cosine_similarity(hp, ht), 2.0 / (std::sqrt(2.0) * 2.0), 1e-9, "cosine 0.707");
}

void spectrogram(Check& c) {
  const auto silent = mel_spectrogram(Audio{std::vector<float>(22050, 0.0f), 22050});
  bool floor = silent.n_columns() == 44;
  for (std::size_t col = 0; col < silent.n_columns(); ++col)
    for (int b = 0; b < 128; ++b) floor &= silent.at(b, col) == -80.0f;
  c.expect(floor, "silence gives the -80 dB floor everywhere");

  const auto tone = mel_spectrogram(synth::sine(440.0, 1.0));
  // Band whose Slaney centre is nearest 440 Hz; below 1 kHz the scale is linear (3 mels per 200 Hz).
  const double span = 15.0 + 27.0 * std::log(11025.0 / 1000.0) / std::log(6.4);
  const int expected = static_cast<int>(std::lround(440.0 * 3.0 / 200.0 / span * 129.0)) - 1;
  for (std::size_t col = 0; col < tone.n_columns(); ++col) {
    const auto v = tone.column(col);
    const int arg = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    c.expect(arg == expected, "440 Hz dominant band at column " + std::to_string(col) + " is " + std::to_string(arg) +
                                  ", want " + std::to_string(expected));
  }

  const auto music = synth::marker_track(20.0, {100, 500}, 9);
  MelParams one, many;
  one.threads = 1;
  many.threads = 8;
  const auto a = mel_spectrogram(music, one), b = mel_spectrogram(music, one), d = mel_spectrogram(music, many);
  const std::size_t bytes = a.n_columns() * 128 * sizeof(float);
  c.expect(std::memcmp(a.data().data(), b.data().data(), bytes) == 0, "identical bytes across runs");
  c.expect(std::memcmp(a.data().data(), d.data().data(), bytes) == 0, "identical bytes across thread counts");

  for (std::size_t n : {1u, 354u, 355u, 356u, 10000u})
    for (int pad : {89, 177, 266}) {
      const auto edges = window_left_edges(n, pad);
      for (std::size_t col = 0; col < n; ++col) {
        const auto x = static_cast<std::int64_t>(col) + pad;
        bool covered = false;
        for (auto e : edges) covered |= e <= x && x < e + kTileWidth;
        if (!covered) {
          c.expect(false, "N=" + std::to_string(n) + " pad=" + std::to_string(pad) + " column " + std::to_string(col));
          break;
        }
      }
      c.expect(true, "coverage");
    }
}

void tile_geometry(Check& c) {
  MelSpec s(128, 1500);
  std::mt19937_64 rng(6);
  for (std::size_t col = 0; col < s.n_columns(); ++col)
    for (int b = 0; b < 128; ++b) s.at(b, col) = -static_cast<float>(rng() % 80);

  for (int trial = 0; trial < 500; ++trial) {
    const auto p = static_cast<std::int64_t>(rng() % s.n_columns());
    const int o = static_cast<int>(rng() % kTileWidth);
    const auto t = training_tile(s, p, o, 21);
    bool same = true;
    for (int b = 0; b < 128; ++b) same &= t.image.at(band_to_row(b, 128), o) == db_to_pixel(s.at(b, p));
    c.expect(same, "tile column o holds spectrogram column p");
    c.expect(t.left + o == p, "left + o == p");
  }

  const auto corner = training_tile(s, 0, 0, 21);
  c.expect(corner.boxes.at(0) == TileBox{0, 11}, "p=0 o=0 box [0, 11)");
  const auto last = static_cast<std::int64_t>(s.n_columns()) - 1;
  const auto edge = training_tile(s, last, 300, 21);
  bool padded = true;
  for (int x = 301; x < kTileWidth; ++x)
    for (int r = 0; r < 128; ++r) padded &= edge.image.at(r, x) == 0;
  c.expect(padded, "columns past N are zero");
  c.expect(edge.boxes.at(0) == TileBox{290, 311}, "p=N-1 o=300 box [290, 311)");
  const auto crop_right = training_tile(s, last, 350, 21);
  c.expect(crop_right.boxes.at(0) == TileBox{340, 355}, "box cropped at the right edge");

  // Full export path: annotation widths never exceed w.
  const fs::path dir = scratch_dir();
  const auto wav = dir / "t.wav";
  write_wav16(wav.string(), synth::marker_track(30.0, {0, 300, 1290}, 4));
  TrackRecord r;
  r.key = TrackKey::make("synthetic", "tiles");
  r.duration = 30.0;
  r.cues = {0.0, 0.3, 7.0, 29.9};
  EngineConfig cfg;
  cfg.seed = 8;
  for (int w : {1, 21, 35}) {
    cfg.box_width = w;
    const auto sum = export_tiles({{&r, wav}}, cfg, dir / ("w" + std::to_string(w)));
    std::ifstream in(dir / ("w" + std::to_string(w)) / "annotations.json");
    const auto doc = nlohmann::json::parse(in);
    c.expect(sum.images == r.cues.size(), "one tile per cue");
    for (const auto& a : doc.at("annotations")) {
      const int bw = a.at("bbox")[2].get<int>();
      const int x0 = a.at("bbox")[0].get<int>();
      c.expect(bw >= 1 && bw <= w, "bbox width <= w for w=" + std::to_string(w));
      c.expect(x0 >= 0 && x0 + bw <= kTileWidth, "bbox inside tile");
    }
    for (const auto& im : doc.at("images")) {
      const auto png = read_png_gray((dir / ("w" + std::to_string(w)) / im.at("file").get<std::string>()).string());
      c.expect(png.width == kTileWidth && png.height == kTileHeight, "tile is 355 x 128");
    }
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  criterion("phrasing oracle parity", 5.0, phrasing);
  criterion("cue merge properties", 5.0, cue_merge);
  criterion("peak selection parity", 0.0, peak_selection);
  criterion("synthetic end-to-end", 30.0, end_to_end);
  criterion("metric machinery", 0.0, metrics);
  criterion("spectrogram checks", 0.0, spectrogram);
  criterion("tile geometry", 0.0, tile_geometry);
  std::printf("%s: %d criteria failed\n", g_failed ? "FAIL" : "PASS", g_failed);
  return g_failed ? 1 : 0;
}
