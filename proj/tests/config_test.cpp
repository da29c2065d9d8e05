#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "cue/config.hpp"

using namespace cue;

TEST(Config, DefaultsAreValid) {
  EngineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.pad, 177);
  EXPECT_EQ(cfg.stride, 89);
  EXPECT_EQ(cfg.radius_bars, 16);
  EXPECT_DOUBLE_EQ(cfg.threshold, 0.9);
  const auto mp = cfg.mel_params();
  EXPECT_EQ(mp.n_fft, 2048);
  EXPECT_EQ(mp.hop, 512);
  EXPECT_DOUBLE_EQ(mp.f_max, 11025.0);
}

TEST(Config, ParsesSectionsCommentsAndTypes) {
  EngineConfig cfg;
  apply_config_text(cfg, R"(
# engine settings
pad = 266          # widest context
pad_random = true
threshold = 0.85
median_bpm = 126
seed = 42

[split]
train = 0.7
val = 0.15
test = 0.15
)");
  EXPECT_EQ(cfg.pad, 266);
  EXPECT_TRUE(cfg.pad_random);
  EXPECT_DOUBLE_EQ(cfg.threshold, 0.85);
  ASSERT_TRUE(cfg.median_bpm);
  EXPECT_DOUBLE_EQ(*cfg.median_bpm, 126.0);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_DOUBLE_EQ(cfg.split_train, 0.7);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EngineConfig cfg;
  EXPECT_THROW(apply_config_text(cfg, "paddding = 100"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "pad = wide"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "pad = 1.5"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "pad_random = 1"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "just words"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "[split"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/engine.toml"), ConfigError);
}

TEST(Config, ValidationErrors) {
  auto broken = [](auto mutate) {
    EngineConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(broken([](auto& c) { c.pad = 88; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.pad = 267; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.box_width = 20; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.tile_width = 400; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.mel_bands = 64; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.stride = 356; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.threshold = 1.1; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.radius_bars = 12; }).validate(), ConfigError);
  EXPECT_NO_THROW(broken([](auto& c) {
                    c.radius_bars = 12;
                    c.radius_override = true;
                  }).validate());
  EXPECT_THROW(broken([](auto& c) { c.median_bpm = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.split_train = 0.5; }).validate(), ConfigError);
  EXPECT_THROW(broken([](auto& c) { c.batch_size = 0; }).validate(), ConfigError);
}

TEST(ConfigProperty, TextRoundTrip) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    EngineConfig c;
    c.pad = 89 + static_cast<int>(rng() % 178);
    c.pad_random = rng() % 2;
    c.threshold = u(rng);
    c.ap_threshold = u(rng);
    c.radius_bars = rng() % 2 ? 8 : 16;
    c.per_track_radius = rng() % 2;
    if (rng() % 2) c.median_bpm = 60.0 + 120.0 * u(rng);
    c.split_train = 0.5 + 0.3 * u(rng);
    c.split_val = (1.0 - c.split_train) / 3.0;
    c.split_test = 1.0 - c.split_train - c.split_val;
    c.seed = rng() >> 1;
    c.batch_size = 1 + static_cast<int>(rng() % 64);
    c.threads = static_cast<int>(rng() % 9);
    c.top_db = 80.0;
    EngineConfig back;
    apply_config_text(back, to_config_text(c));
    ASSERT_EQ(back, c) << to_config_text(c);
  }
}

TEST(Config, LoadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "cue_config_test.toml";
  std::ofstream(path) << "batch_size = 4\nradius_bars = 8\n";
  const auto cfg = load_config(path.string());
  EXPECT_EQ(cfg.batch_size, 4);
  EXPECT_EQ(cfg.radius_bars, 8);
  std::filesystem::remove(path);
}
