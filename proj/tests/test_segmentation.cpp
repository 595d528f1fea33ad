#include <gtest/gtest.h>

#include <cmath>

#include <wheelsense/segmentation.hpp>

using namespace wheelsense;

namespace {

SignalRecord ramp(double seconds, double fs = 1000.0) {
  SignalRecord s;
  s.sampling_rate_hz = fs;
  s.samples.resize(static_cast<std::size_t>(std::llround(seconds * fs)));
  for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] = static_cast<double>(i);
  return s;
}

std::vector<std::size_t> chosen(const DetectionResult& r) {
  std::vector<std::size_t> out;
  for (const auto& p : r.points) out.push_back(p.sub_index);
  return out;
}

}  // namespace

TEST(Frames, CountAndRemainder) {
  EXPECT_EQ(segment_frames(ramp(6000.0, 100.0), 300.0).size(), 20u);
  const auto one = segment_frames(ramp(301.0, 100.0), 300.0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].samples.size(), 30000u);
  EXPECT_THROW(segment_frames(ramp(299.0, 100.0), 300.0), DataError);
}

TEST(SubWindows, TenSecondsAtOneKilohertz) {
  const auto sig = ramp(300.0);
  const auto frames = segment_frames(sig, 300.0);
  for (const auto& w : segment_subwindows(frames[0], 1000.0, 10.0, 0.5)) EXPECT_EQ(w.samples.size(), 10000u);
}

TEST(SubWindows, CountFormulaGrid) {
  const auto sig = ramp(600.0, 100.0);
  for (double frame_s : {60.0, 120.0, 300.0}) {
    const auto frames = segment_frames(sig, frame_s);
    for (double sub : {5.0, 10.0, 20.0, 30.0, 60.0}) {
      if (sub > frame_s) continue;
      for (double ov : {0.0, 0.25, 0.5, 0.75}) {
        const double step = sub * (1.0 - ov);
        const auto expect = static_cast<std::size_t>(std::floor((frame_s - sub) / step + 1e-9)) + 1;
        const auto w = segment_subwindows(frames[0], 100.0, sub, ov);
        ASSERT_EQ(w.size(), expect) << frame_s << " " << sub << " " << ov;
        EXPECT_EQ(WindowGeometry::from(100.0, frame_s, sub, ov).windows_per_frame(), expect);
        for (const auto& x : w) {
          EXPECT_EQ(x.samples.size(), static_cast<std::size_t>(std::llround(sub * 100.0)));
          EXPECT_DOUBLE_EQ(x.start_time_s, x.sub_index * step);
        }
      }
    }
  }
  const auto frames = segment_frames(ramp(300.0, 100.0), 300.0);
  EXPECT_EQ(segment_subwindows(frames[0], 100.0, 30.0, 0.5).size(), 19u);
  EXPECT_EQ(segment_subwindows(frames[0], 100.0, 300.0, 0.5).size(), 1u);
}

TEST(SubWindows, SlicesTileTheFrame) {
  const auto sig = ramp(900.0, 50.0);
  PipelineConfig cfg;
  cfg.sub_window_s = 40.0;
  cfg.overlap_fraction = 0.25;
  const auto g = WindowGeometry::from(50.0, cfg);
  for (const auto& w : segment_signal(sig, cfg)) {
    const auto off = g.window_offset(w.frame_index, w.sub_index);
    ASSERT_EQ(w.samples.front(), static_cast<double>(off));
    ASSERT_EQ(w.samples.back(), static_cast<double>(off + g.window_samples - 1));
    EXPECT_DOUBLE_EQ(w.start_time_s, w.frame_index * 300.0 + w.sub_index * 30.0);
  }
}

TEST(DetectionPoints, ReplaysWorkedScenario) {
  const std::vector<FrameValidSet> frames = {
      {0, {2, 4, 13, 20}}, {1, {3, 9, 17}}, {2, {10, 17, 25}}, {3, {30, 45}}, {4, {5, 20, 41}}};
  const auto r = select_detection_points(frames, WindowGeometry::from(1000.0, 300.0, 10.0, 0.5), 0.0,
                                         DetectionPoint{0, 2, 0.0});
  EXPECT_EQ(chosen(r), (std::vector<std::size_t>{2, 3, 10, 30, 20}));
  EXPECT_TRUE(r.skipped_frames.empty());
  EXPECT_DOUBLE_EQ(r.points[3].time_s, 3 * 300.0 + 30 * 5.0);
}

TEST(DetectionPoints, TiesSingletonsAndSkips) {
  const auto g = WindowGeometry::from(1000.0, 300.0, 30.0, 0.5);
  const std::vector<FrameValidSet> tie = {{0, {5}}, {1, {3, 7}}};
  EXPECT_EQ(chosen(select_detection_points(tie, g)), (std::vector<std::size_t>{5, 3}));

  const std::vector<FrameValidSet> single = {{0, {4}}, {1, {11}}, {2, {0}}, {3, {18}}};
  EXPECT_EQ(chosen(select_detection_points(single, g)), (std::vector<std::size_t>{4, 11, 0, 18}));

  const std::vector<FrameValidSet> gap = {{0, {6, 9}}, {1, {}}, {2, {1, 12}}};
  const auto r = select_detection_points(gap, g);
  EXPECT_EQ(chosen(r), (std::vector<std::size_t>{6, 1}));
  EXPECT_EQ(r.skipped_frames, (std::vector<std::size_t>{1}));

  EXPECT_THROW(select_detection_points(tie, g, 0.0, DetectionPoint{0, 4, 0.0}), std::invalid_argument);
}

TEST(DetectionPoints, ArgminHoldsOnRandomSets) {
  const auto g = WindowGeometry::from(1000.0, 300.0, 30.0, 0.5);
  std::uint64_t state = 17;
  auto next = [&] { return (state = state * 6364136223846793005ULL + 1442695040888963407ULL) >> 33; };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FrameValidSet> frames;
    for (std::size_t f = 0; f < 12; ++f) {
      FrameValidSet s{f, {}};
      for (std::size_t i = 0; i < 19; ++i) {
        if (next() % 4 == 0) s.valid_indices.push_back(i);
      }
      frames.push_back(s);
    }
    const auto r = select_detection_points(frames, g);
    for (std::size_t k = 1; k < r.points.size(); ++k) {
      const auto prev = static_cast<long>(r.points[k - 1].sub_index);
      const auto cur = static_cast<long>(r.points[k].sub_index);
      for (auto i : frames[r.points[k].frame_index].valid_indices) {
        const long d = std::labs(static_cast<long>(i) - prev);
        ASSERT_LE(std::labs(cur - prev), d);
        if (d == std::labs(cur - prev)) {
          ASSERT_LE(cur, static_cast<long>(i));
        }
      }
    }
  }
}

TEST(Segments, CsvRoundTrip) {
  const auto sig = ramp(600.0, 100.0);
  PipelineConfig cfg;
  auto w = segment_signal(sig, cfg);
  w[3].validity = Validity::Valid;
  w[7].validity = Validity::Noise;
  const auto text = segments_csv_text(w);
  EXPECT_EQ(text.substr(0, text.find('\n')), "frame_index,sub_index,start_time_s,validity");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(w.size() + 1));
}
