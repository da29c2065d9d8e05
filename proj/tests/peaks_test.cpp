#include <random>

#include <gtest/gtest.h>

#include "cue/peaks.hpp"
#include "oracles.hpp"

using namespace cue;

namespace {

ConfidenceTrace trace_of(std::vector<Detection> e) { return {std::move(e), 0}; }

std::vector<std::int64_t> columns(const std::vector<CueCandidate>& c) {
  std::vector<std::int64_t> out;
  for (const auto& x : c) out.push_back(x.column);
  return out;
}

// Random position-sorted trace with quantized scores so ties occur.
ConfidenceTrace random_trace(std::mt19937_64& rng) {
  const auto len = 1 + rng() % 5000;
  const auto count = rng() % 201;
  std::vector<Detection> e;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double score = static_cast<double>(rng() % 21) / 20.0;
    e.push_back({static_cast<std::int64_t>(rng() % len), score});
  }
  std::vector<std::vector<Detection>> one{e};
  return accumulate(one, len);
}

}  // namespace

TEST(SelectPeaks, SuppressesNeighbours) {
  const auto t = trace_of({{100, 0.95}, {110, 0.92}, {400, 0.97}});
  const auto p = select_peaks(t, 50);
  EXPECT_EQ(columns(p), (std::vector<std::int64_t>{100, 400}));
  EXPECT_EQ(p[0].rank, 2);
  EXPECT_EQ(p[1].rank, 1);
}

TEST(SelectPeaks, EqualScoresPreferSmallerColumn) {
  EXPECT_EQ(columns(select_peaks(trace_of({{200, 0.95}, {300, 0.95}}), 150)), (std::vector<std::int64_t>{200}));
}

TEST(SelectPeaks, ThresholdAndRadiusEdges) {
  EXPECT_TRUE(select_peaks(trace_of({{1, 0.5}, {2, 0.89}}), 10).empty());
  EXPECT_EQ(columns(select_peaks(trace_of({{100, 0.9}}), 10)), (std::vector<std::int64_t>{100}));
  // Exactly `radius` apart is suppressed, one more is kept.
  EXPECT_EQ(columns(select_peaks(trace_of({{100, 0.99}, {150, 0.95}}), 50)), (std::vector<std::int64_t>{100}));
  EXPECT_EQ(columns(select_peaks(trace_of({{100, 0.99}, {151, 0.95}}), 50)), (std::vector<std::int64_t>{100, 151}));
  EXPECT_EQ(columns(select_peaks(trace_of({{100, 0.99}, {101, 0.95}}), 0)), (std::vector<std::int64_t>{100, 101}));
  EXPECT_TRUE(select_peaks(trace_of({}), 10).empty());
}

TEST(SelectPeaks, RejectsBadArguments) {
  EXPECT_THROW(select_peaks(trace_of({}), -1), Error);
  EXPECT_THROW(select_peaks(trace_of({}), 1, 1.5), Error);
}

TEST(SelectPeaks, TimesFollowColumns) {
  const auto p = select_peaks(trace_of({{1000, 0.95}}), 10);
  EXPECT_NEAR(p[0].time, 1000.0 * 512 / 22050, 1e-12);
}

TEST(Radius, FromBars) {
  EXPECT_EQ(radius_from_bars(16, 120), 1378);
  EXPECT_EQ(radius_from_bars(8, 120), 689);
  EXPECT_EQ(radius_from_bars(0, 120), 0);
  EXPECT_THROW(radius_from_bars(16, 0), ConfigError);
  EXPECT_THROW(radius_from_bars(-1, 120), ConfigError);
}

TEST(SelectPeaksProperty, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = random_trace(rng);
    const auto radius = static_cast<std::int64_t>(rng() % 400);
    const double threshold = static_cast<double>(rng() % 11) / 10.0;
    std::vector<oracle::Entry> entries;
    for (const auto& d : t.entries) entries.push_back({d.column, d.score});
    const auto got = select_peaks(t, radius, threshold);
    ASSERT_EQ(columns(got), oracle::select_peaks(entries, radius, threshold)) << "trial " << trial;

    for (std::size_t i = 1; i < got.size(); ++i) ASSERT_GT(got[i].column - got[i - 1].column, radius);
    for (const auto& c : got) ASSERT_GE(c.score, threshold);
    // Maximality: every unselected admissible entry lies within the radius of a pick.
    for (const auto& d : t.entries) {
      if (d.score < threshold) continue;
      bool covered = false;
      for (const auto& c : got) covered |= std::llabs(c.column - d.column) <= radius;
      ASSERT_TRUE(covered);
    }
  }
}

TEST(SelectPeaksProperty, RaisingThresholdKeepsOnlyRetainedHighScorers) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_trace(rng);
    const auto radius = static_cast<std::int64_t>(rng() % 300);
    const auto low = select_peaks(t, radius, 0.5);
    const auto high = select_peaks(t, radius, 0.8);
    // Picks above the higher threshold are made identically at either threshold,
    // because the greedy order visits them first.
    std::vector<std::int64_t> low_high;
    for (const auto& c : low)
      if (c.score >= 0.8) low_high.push_back(c.column);
    ASSERT_EQ(columns(high), low_high);
  }
}
