#include <gtest/gtest.h>

#include <cmath>

#include <wheelsense/features.hpp>
#include <wheelsense/synth.hpp>

using namespace wheelsense;

namespace {

double std_of(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

SignalRecord carrier(double seconds, std::uint64_t seed) {
  SynthSettings s;
  s.duration_s = seconds;
  s.fst_events = 0;
  s.flat_events = s.artifact_events = s.rub_events = 0;
  s.flat_max_s = s.artifact_max_s = std::min(s.flat_max_s, seconds / 2);
  s.flat_min_s = s.artifact_min_s = std::min(s.flat_min_s, s.flat_max_s);
  s.positive_span_s = 10.0;
  return generate_session(s, seconds / 2, seed).signal;
}

}  // namespace

TEST(Synth, Deterministic) {
  SynthSettings s;
  s.duration_s = 1800.0;
  s.fst_events = 1;
  const auto a = generate_session(s, 300.0, 5, "x");
  const auto b = generate_session(s, 300.0, 5, "x");
  EXPECT_EQ(a.signal.samples, b.signal.samples);
  EXPECT_EQ(events_csv_text(a.truth.events), events_csv_text(b.truth.events));
  EXPECT_EQ(positives_csv_text(a.truth.positives), positives_csv_text(b.truth.positives));
  EXPECT_NE(generate_session(s, 300.0, 6, "x").signal.samples, a.signal.samples);
}

TEST(Synth, FstFramesByConstruction) {
  SynthSettings s;  // 6000 s, three events
  const auto out = generate_session(s, 300.0, 1);
  const auto labels = out.truth.frame_labels();
  EXPECT_EQ(std::count(labels.labels.begin(), labels.labels.end(), FstLabel::FST), 3);
  EXPECT_EQ(labels.labels.size(), 19u);
  const auto derived = derive_fst_labels(out.truth.sofi, 1.0);
  EXPECT_EQ(derived.labels, labels.labels);
}

TEST(Synth, NoEventsMeansAllValid) {
  SynthSettings s;
  s.duration_s = 1200.0;
  s.fst_events = 1;
  s.flat_events = s.artifact_events = s.rub_events = 0;
  const auto out = generate_session(s, 300.0, 2);
  const auto truth = out.truth.window_truth(WindowGeometry::from(1000.0, 300.0, 30.0, 0.5), 0.25);
  EXPECT_EQ(truth.size(), 4u * 19u);
  for (auto v : truth) EXPECT_EQ(v, Validity::Valid);
}

TEST(Synth, NoiseEventsDoNotOverlap) {
  SynthSettings s;
  const auto out = generate_session(s, 300.0, 8);
  EXPECT_EQ(out.truth.events.size(), s.flat_events + s.artifact_events + s.rub_events);
  for (std::size_t i = 1; i < out.truth.events.size(); ++i) {
    EXPECT_LE(out.truth.events[i - 1].end_s, out.truth.events[i].start_s);
  }
  for (const auto& e : out.truth.events) {
    EXPECT_GE(e.start_s, 0.0);
    EXPECT_LE(e.end_s, s.duration_s);
  }
}

TEST(InjectNoise, FlatLoss) {
  auto sig = carrier(60.0, 1);
  const auto clean = sig;
  const std::vector<NoiseEvent> ev = {{NoiseKind::FlatLoss, 10.0, 20.0, 3.5, 1.0, 0}};
  inject_noise(sig, ev);
  const std::span<const double> all(sig.samples);
  EXPECT_EQ(std_of(all.subspan(10000, 10000)), 0.0);
  EXPECT_EQ(sig.samples[15000], 3.5);
  for (std::size_t i = 0; i < 10000; ++i) ASSERT_EQ(sig.samples[i], clean.samples[i]);
  for (std::size_t i = 20000; i < sig.samples.size(); ++i) ASSERT_EQ(sig.samples[i], clean.samples[i]);
}

TEST(InjectNoise, EmptyIsIdentityAndRangeChecked) {
  auto sig = carrier(60.0, 2);
  const auto clean = sig;
  inject_noise(sig, {});
  EXPECT_EQ(sig.samples, clean.samples);
  const std::vector<NoiseEvent> bad = {{NoiseKind::Artifact, 50.0, 70.0, 1.0, 2.0, 0}};
  EXPECT_THROW(inject_noise(sig, bad), DataError);
}

TEST(InjectNoise, ArtifactRaisesStd) {
  auto sig = carrier(60.0, 3);
  const auto clean = sig;
  const std::vector<NoiseEvent> ev = {{NoiseKind::Artifact, 20.0, 40.0, std_of(clean.samples), 6.0, 4}};
  inject_noise(sig, ev);
  const auto w = std::span<const double>(sig.samples).subspan(20000, 20000);
  const auto c = std::span<const double>(clean.samples).subspan(20000, 20000);
  EXPECT_GT(std_of(w), std_of(c));
}

TEST(Synth, CleanSpectrumInsideCarrierBand) {
  const auto sig = carrier(120.0, 4);
  SynthSettings s;
  const double resolution = 1000.0 / 1024.0;
  for (std::size_t k = 0; k + 30000 <= sig.samples.size(); k += 30000) {
    const auto f = spectral_frequencies(std::span<const double>(sig.samples).subspan(k, 30000), 1000.0);
    EXPECT_GE(f.mean_hz, s.carrier_low_hz - resolution);
    EXPECT_LE(f.mean_hz, s.carrier_high_hz + resolution);
    EXPECT_GE(f.median_hz, s.carrier_low_hz - resolution);
    EXPECT_LE(f.median_hz, s.carrier_high_hz + resolution);
  }
}

TEST(Synth, RejectsBadSettings) {
  SynthSettings s;
  s.carrier_high_hz = 600.0;
  EXPECT_THROW(generate_session(s, 300.0, 1), ConfigError);
  s = SynthSettings{};
  s.duration_s = 400.0;
  EXPECT_THROW(generate_session(s, 300.0, 1), ConfigError);
}
