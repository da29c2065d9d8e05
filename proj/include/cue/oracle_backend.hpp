#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "cue/backend.hpp"

namespace cue {

namespace detail {

inline QueryPrediction make_query(const BackendSpec& spec, double center_px, double margin, int box_w) {
  QueryPrediction q;
  q.logits.assign(static_cast<std::size_t>(std::max(spec.cue_class_index, spec.no_object_index) + 1), 0.0f);
  q.logits[spec.cue_class_index] = static_cast<float>(margin / 2);
  q.logits[spec.no_object_index] = static_cast<float>(-margin / 2);
  q.box = {static_cast<float>(center_px / spec.width), 0.5f, static_cast<float>(box_w) / spec.width, 1.0f};
  return q;
}

inline void pad_with_empty_queries(BackendOutput& out, const BackendSpec& spec) {
  if (out.queries.size() > static_cast<std::size_t>(spec.num_queries)) out.queries.resize(spec.num_queries);
  while (out.queries.size() < static_cast<std::size_t>(spec.num_queries)) {
    auto q = make_query(spec, spec.width / 2.0, -8.0, 1);  // no-object wins
    out.queries.push_back(std::move(q));
  }
}

}  // namespace detail

/// Test oracle that fires at fixed tile-relative columns on every image.
class FixedPositionOracle : public DetectorBackend {
public:
  FixedPositionOracle(BackendSpec spec, std::vector<int> columns, double logit_margin = 8.0)
      : spec_(std::move(spec)), columns_(std::move(columns)), margin_(logit_margin) {}

  const BackendSpec& spec() const override { return spec_; }

  std::vector<BackendOutput> infer(std::span<const ImageTensor> batch) override {
    std::vector<BackendOutput> outs(batch.size());
    for (auto& out : outs) {
      for (int c : columns_) out.queries.push_back(detail::make_query(spec_, c, margin_, 21));
      detail::pad_with_empty_queries(out, spec_);
    }
    return outs;
  }

private:
  BackendSpec spec_;
  std::vector<int> columns_;
  double margin_;
};

/// Test oracle that "sees" broadband markers: columns whose mean brightness
/// (pixel units in [0, 1], recovered from the normalized tensor) is a local
/// maximum above `threshold`. Brighter columns get higher scores.
class MarkerOracle : public DetectorBackend {
public:
  MarkerOracle(BackendSpec spec, double threshold = 0.8, double gain = 40.0)
      : spec_(std::move(spec)), threshold_(threshold), gain_(gain) {}

  const BackendSpec& spec() const override { return spec_; }

  std::vector<BackendOutput> infer(std::span<const ImageTensor> batch) override {
    std::vector<BackendOutput> outs;
    outs.reserve(batch.size());
    for (const auto& t : batch) outs.push_back(infer_one(t));
    return outs;
  }

  std::vector<double> column_brightness(const ImageTensor& t) const {
    std::vector<double> mean(static_cast<std::size_t>(t.width), 0.0);
    for (int r = 0; r < t.height; ++r)
      for (int c = 0; c < t.width; ++c) mean[c] += t.at(0, r, c) * spec_.std[0] + spec_.mean[0];
    for (auto& m : mean) m /= t.height;
    return mean;
  }

private:
  BackendOutput infer_one(const ImageTensor& t) const {
    const auto mean = column_brightness(t);
    BackendOutput out;
    const int w = t.width;
    for (int c = 0; c < w; ++c) {
      if (mean[c] < threshold_) continue;
      const bool left_ok = c == 0 || mean[c] > mean[c - 1];
      const bool right_ok = c == w - 1 || mean[c] >= mean[c + 1];
      if (!left_ok || !right_ok) continue;
      out.queries.push_back(detail::make_query(spec_, c, gain_ * (mean[c] - threshold_) + 1.0, 21));
    }
    detail::pad_with_empty_queries(out, spec_);
    return out;
  }

  BackendSpec spec_;
  double threshold_;
  double gain_;
};

}  // namespace cue
