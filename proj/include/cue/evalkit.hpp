#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cue/beatgrid.hpp"
#include "cue/dataset.hpp"
#include "cue/phrasing.hpp"

namespace cue {

enum class Tolerance { one_beat, half_beat };
enum class TruthKind { cues_only, bars16, bars8 };

inline const char* name(Tolerance t) { return t == Tolerance::one_beat ? "T1" : "T1/2"; }
inline const char* name(TruthKind k) {
  switch (k) {
    case TruthKind::cues_only: return "cues-only";
    case TruthKind::bars16: return "16-bars";
    default: return "8-bars";
  }
}

inline double tolerance_seconds(Tolerance t, const BeatGrid& g) {
  return t == Tolerance::one_beat ? g.beat_duration() : g.beat_duration() / 2.0;
}

/// Ground truth for one track in seconds. The phrase-aligned kinds add the
/// phrase boundaries computed from the bar-quantized cues on top of the
/// original cue times.
inline std::vector<double> ground_truth(const TrackRecord& r, TruthKind kind) {
  std::vector<double> out = r.cues;
  std::sort(out.begin(), out.end());
  if (kind == TruthKind::cues_only || out.empty()) return out;

  const int len = kind == TruthKind::bars16 ? 16 : 8;
  const double duration_bars = r.grid.bar_position(r.duration);
  std::vector<double> cue_bars;
  for (double c : out) cue_bars.push_back(static_cast<double>(r.grid.quantize_to_bar(c)));
  std::sort(cue_bars.begin(), cue_bars.end());
  cue_bars.erase(std::unique(cue_bars.begin(), cue_bars.end()), cue_bars.end());
  std::erase_if(cue_bars, [&](double b) { return b >= duration_bars; });
  if (cue_bars.empty()) return out;

  const auto bounds = phrase_boundaries({len, duration_bars, cue_bars}).boundaries;
  for (double b : bounds) {
    if (std::binary_search(cue_bars.begin(), cue_bars.end(), b)) continue;
    const double t = r.grid.bar_start_time(b);
    if (t >= 0.0 && t <= r.duration) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct TimedPrediction {
  double time = 0.0;
  double score = 1.0;
};

struct MatchCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct MatchResult {
  std::vector<bool> pred_is_tp;       // indexed like the input predictions
  std::vector<bool> truth_matched;    // indexed like the input truth
  std::vector<std::optional<std::size_t>> pred_to_truth;
  MatchCounts counts;
};

/// Greedy one-to-one matching. Predictions, in descending score order (stable
/// for ties), each claim the nearest unclaimed truth with |pred - truth| <= tol.
inline MatchResult match(const std::vector<TimedPrediction>& preds, const std::vector<double>& truth, double tol) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return preds[a].score > preds[b].score; });

  MatchResult m;
  m.pred_is_tp.assign(preds.size(), false);
  m.pred_to_truth.assign(preds.size(), std::nullopt);
  m.truth_matched.assign(truth.size(), false);
  for (std::size_t i : order) {
    std::optional<std::size_t> best;
    double best_dist = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (m.truth_matched[j]) continue;
      const double d = std::abs(preds[i].time - truth[j]);
      if (d > tol) continue;
      if (!best || d < best_dist || (d == best_dist && truth[j] < truth[*best])) {
        best = j;
        best_dist = d;
      }
    }
    if (best) {
      m.truth_matched[*best] = true;
      m.pred_is_tp[i] = true;
      m.pred_to_truth[i] = best;
      ++m.counts.tp;
    } else {
      ++m.counts.fp;
    }
  }
  m.counts.fn = truth.size() - m.counts.tp;
  return m;
}

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline Prf prf(const MatchCounts& c) {
  Prf r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

/// Corpus micro-average: counts are pooled before dividing.
inline Prf prf_micro(const std::vector<MatchCounts>& per_track) {
  MatchCounts total;
  for (const auto& c : per_track) total += c;
  return prf(total);
}

/// Per-track P and R averaged over tracks; F1 is taken from the averaged P and R.
inline Prf prf_macro(const std::vector<MatchCounts>& per_track) {
  Prf out;
  if (per_track.empty()) return out;
  for (const auto& c : per_track) {
    const Prf p = prf(c);
    out.precision += p.precision;
    out.recall += p.recall;
  }
  out.precision /= static_cast<double>(per_track.size());
  out.recall /= static_cast<double>(per_track.size());
  if (out.precision + out.recall > 0.0) out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

struct RankedLabel {
  double score = 0.0;
  bool tp = false;
};

/// Sum over true positives of precision at that rank, divided by the number of
/// ground-truth points. Labels are ranked by descending score (stable).
inline double average_precision(std::vector<RankedLabel> ranked, std::size_t total_truth) {
  if (total_truth == 0) return 0.0;
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  double sum = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k].tp) continue;
    ++tp;
    sum += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(total_truth);
}

using BarHistogram = std::vector<double>;  // index = bar

inline void add_to_histogram(BarHistogram& h, const std::vector<double>& times, const BeatGrid& g) {
  for (double t : times) {
    const auto bar = g.quantize_to_bar(t);
    if (bar < static_cast<std::int64_t>(h.size())) h[static_cast<std::size_t>(bar)] += 1.0;
  }
}

inline double cosine_similarity(const BarHistogram& a, const BarHistogram& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += a[i] * b[i];
  for (double v : a) na += v * v;
  for (double v : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Cosine similarity of corpus histograms over bars [0, n_bars_cap]; positions
/// quantizing past the cap are ignored.
inline double cosine_hist(const std::vector<std::vector<double>>& pred_times,
                          const std::vector<std::vector<double>>& truth_times, const std::vector<BeatGrid>& grids,
                          std::size_t n_bars_cap) {
  if (pred_times.size() != grids.size() || truth_times.size() != grids.size())
    throw Error("cosine_hist: one grid per track required");
  BarHistogram hp(n_bars_cap + 1, 0.0), ht(n_bars_cap + 1, 0.0);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    add_to_histogram(hp, pred_times[i], grids[i]);
    add_to_histogram(ht, truth_times[i], grids[i]);
  }
  return cosine_similarity(hp, ht);
}

// ---------------------------------------------------------------------------
// Corpus evaluation

struct TrackPredictions {
  const TrackRecord* track = nullptr;
  std::vector<TimedPrediction> predictions;
};

struct EvalOptions {
  double threshold = 0.9;     // operating point for P/R/F1
  double ap_threshold = 0.5;  // lower bound of the PR sweep
  std::size_t n_bars_cap = 256;
};

struct ScenarioResult {
  Tolerance tolerance;
  TruthKind truth;
  Prf micro;
  Prf macro;
  double ap = 0.0;
  MatchCounts counts;
};

struct MethodReport {
  std::string method;
  std::vector<ScenarioResult> scenarios;  // tolerance-major, truth-minor
  double cosine = 0.0;
  std::size_t tracks = 0;

  const ScenarioResult& at(Tolerance t, TruthKind k) const {
    for (const auto& s : scenarios)
      if (s.tolerance == t && s.truth == k) return s;
    throw Error("scenario not evaluated");
  }
};

inline constexpr Tolerance kTolerances[] = {Tolerance::one_beat, Tolerance::half_beat};
inline constexpr TruthKind kTruthKinds[] = {TruthKind::cues_only, TruthKind::bars16, TruthKind::bars8};

inline MethodReport evaluate_method(const std::string& method, const std::vector<TrackPredictions>& tracks,
                                    const EvalOptions& opt = {}) {
  MethodReport rep;
  rep.method = method;
  rep.tracks = tracks.size();

  for (Tolerance tol : kTolerances) {
    for (TruthKind kind : kTruthKinds) {
      std::vector<MatchCounts> per_track;
      std::vector<RankedLabel> ranked;
      std::size_t total_truth = 0;
      for (const auto& tp : tracks) {
        const auto truth = ground_truth(*tp.track, kind);
        const double tol_s = tolerance_seconds(tol, tp.track->grid);

        std::vector<TimedPrediction> operating, sweep;
        for (const auto& p : tp.predictions) {
          if (p.score >= opt.threshold) operating.push_back(p);
          if (p.score >= opt.ap_threshold) sweep.push_back(p);
        }
        per_track.push_back(match(operating, truth, tol_s).counts);

        const auto m = match(sweep, truth, tol_s);
        for (std::size_t i = 0; i < sweep.size(); ++i) ranked.push_back({sweep[i].score, m.pred_is_tp[i]});
        total_truth += truth.size();
      }
      ScenarioResult s{tol, kind, prf_micro(per_track), prf_macro(per_track), average_precision(ranked, total_truth),
                       {}};
      for (const auto& c : per_track) s.counts += c;
      rep.scenarios.push_back(s);
    }
  }

  std::vector<std::vector<double>> pred_times, truth_times;
  std::vector<BeatGrid> grids;
  for (const auto& tp : tracks) {
    std::vector<double> t;
    for (const auto& p : tp.predictions)
      if (p.score >= opt.threshold) t.push_back(p.time);
    pred_times.push_back(std::move(t));
    truth_times.push_back(tp.track->cues);
    grids.push_back(tp.track->grid);
  }
  rep.cosine = cosine_hist(pred_times, truth_times, grids, opt.n_bars_cap);
  return rep;
}

}  // namespace cue
