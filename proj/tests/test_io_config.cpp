#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <wheelsense/io_config.hpp>

#include "test_util.hpp"

using namespace wheelsense;

namespace {

SofiTimeline timeline(std::initializer_list<double> scores) {
  SofiTimeline t;
  double time = 0.0;
  for (double s : scores) {
    t.entries.push_back({time, s});
    time += 300.0;
  }
  return t;
}

std::vector<int> as_ints(const FrameLabels& l) {
  std::vector<int> out;
  for (auto v : l.labels) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

TEST(SignalCsv, InfersRateFromSpacing) {
  test::TempDir dir;
  std::string text = "time_s,emg_uv\n";
  for (int i = 0; i < 10000; ++i) text += format_double(i * 0.001) + "," + std::to_string(i % 7) + "\n";
  const auto path = dir.write("sig.csv", text);
  const auto rec = load_signal_csv(path);
  EXPECT_EQ(rec.sampling_rate_hz, 1000.0);
  ASSERT_EQ(rec.samples.size(), 10000u);
  EXPECT_EQ(rec.samples[13], 6.0);
  EXPECT_DOUBLE_EQ(rec.duration_s(), 10.0);
}

TEST(SignalCsv, EmptyDataIsNoSamples) {
  test::TempDir dir;
  for (const char* body : {"", "time_s,emg_uv\n"}) {
    const auto path = dir.write("empty.csv", body);
    try {
      load_signal_csv(path);
      FAIL() << "expected an error";
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos) << e.what();
    }
  }
}

TEST(SignalCsv, RejectsJitteredSpacing) {
  test::TempDir dir;
  std::string text = "time_s,emg_uv\n";
  double t = 0.0;
  for (int i = 0; i < 100; ++i) {
    text += format_double(t) + ",1\n";
    t += i % 2 ? 0.002 : 0.001;
  }
  EXPECT_THROW(load_signal_csv(dir.write("jitter.csv", text)), DataError);
}

TEST(SignalCsv, ReportsMalformedLine) {
  test::TempDir dir;
  const auto path = dir.write("bad.csv", "time_s,emg_uv\n0,1\n0.001,abc\n");
  try {
    load_signal_csv(path);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(SignalCsv, MissingFileNamesPath) {
  try {
    load_signal_csv("/nonexistent/signal.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/signal.csv"), std::string::npos);
  }
}

TEST(SignalCsv, RoundTrip) {
  test::TempDir dir;
  SignalRecord rec;
  rec.sampling_rate_hz = 500.0;
  for (int i = 0; i < 300; ++i) rec.samples.push_back(std::sin(0.1 * i) * 40.0 + 1e-7 * i);
  write_signal_csv(dir.path / "s.csv", rec);
  const auto back = load_signal_csv(dir.path / "s.csv");
  EXPECT_EQ(back.sampling_rate_hz, 500.0);
  EXPECT_EQ(back.samples, rec.samples);
}

TEST(FstLabels, Examples) {
  using L = std::vector<int>;
  EXPECT_EQ(as_ints(derive_fst_labels(timeline({2, 2, 4, 4}), 1.0)), (L{0, 1, 0}));
  EXPECT_EQ(as_ints(derive_fst_labels(timeline({0, 0, 0}), 1.0)), (L{0, 0}));
  EXPECT_EQ(as_ints(derive_fst_labels(timeline({3, 5, 4, 6}), 2.0)), (L{1, 0, 1}));
  EXPECT_THROW(derive_fst_labels(timeline({3}), 1.0), DataError);
}

TEST(FstLabels, CountAndShiftInvariance) {
  const auto base = timeline({1, 2, 2, 5, 4, 4, 6, 7});
  const auto l = derive_fst_labels(base, 1.0);
  EXPECT_EQ(l.labels.size(), base.entries.size() - 1);
  auto shifted = base;
  for (auto& e : shifted.entries) e.score += 2.5;
  EXPECT_EQ(as_ints(derive_fst_labels(shifted, 1.0)), as_ints(l));
  EXPECT_EQ(l.at_frame(1), FstLabel::FST);
  EXPECT_THROW(l.at_frame(0), DataError);
}

TEST(Sofi, ValidateRange) {
  EXPECT_THROW(timeline({1, 11}).validate(), DataError);
  SofiTimeline t;
  t.entries = {{0, 1}, {0, 2}};
  EXPECT_THROW(t.validate(), DataError);
}

TEST(Config, ParseAndRender) {
  const auto cfg = parse_config("# comment\nsub_window_s = 20\nforest.preset = pre_prune\nrng_seed = 9\n");
  EXPECT_EQ(cfg.sub_window_s, 20.0);
  EXPECT_EQ(cfg.forest.preset, "pre_prune");
  EXPECT_EQ(cfg.rng_seed, 9u);
  const auto again = parse_config(config_text(cfg));
  EXPECT_EQ(config_text(again), config_text(cfg));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("sub_window_s = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("sub_window_s = 400\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("overlap_fraction = 1\n").validate(), ConfigError);
}
