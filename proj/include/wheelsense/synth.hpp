#pragma once

// Seeded synthetic sessions: band-limited noise carrier with per-frame
// amplitude drift, FST "waves" (amplitude rise in the transition frame),
// and injected noise events with window-level ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "dsp.hpp"
#include "io_config.hpp"
#include "random.hpp"
#include "segmentation.hpp"

namespace wheelsense {

enum class NoiseKind { FlatLoss, Artifact, FingerRub };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::FlatLoss: return "flat_loss";
    case NoiseKind::Artifact: return "artifact";
    default: return "finger_rub";
  }
}

struct NoiseEvent {
  NoiseKind kind = NoiseKind::FlatLoss;
  double start_s = 0.0;  // relative to the first sample
  double end_s = 0.0;
  double scale_uv = 1.0;  // flat level, or reference amplitude for bursts
  double gain = 1.0;
  std::uint64_t seed = 0;
};

struct PositiveSpan {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct GroundTruth {
  std::vector<NoiseEvent> events;
  std::vector<std::size_t> fst_frames;
  SofiTimeline sofi;
  std::vector<PositiveSpan> positives;
  double session_rms_uv = 0.0;
  std::size_t frame_count = 0;

  /// Fraction of [start, start + length) covered by noise events.
  double noise_coverage(double start_s, double length_s) const {
    std::vector<std::pair<double, double>> parts;
    for (const auto& e : events) {
      const double a = std::max(start_s, e.start_s), b = std::min(start_s + length_s, e.end_s);
      if (b > a) parts.emplace_back(a, b);
    }
    std::sort(parts.begin(), parts.end());
    double covered = 0.0, reach = start_s;
    for (const auto& [a, b] : parts) {
      const double lo = std::max(a, reach);
      if (b > lo) covered += b - lo;
      reach = std::max(reach, b);
    }
    return covered / length_s;
  }

  /// Per sub-window truth: Noise iff coverage >= fraction. Frame-major order.
  std::vector<Validity> window_truth(const WindowGeometry& g, double fraction) const {
    std::vector<Validity> out;
    for (std::size_t f = 0; f < frame_count; ++f) {
      for (std::size_t k = 0; k < g.windows_per_frame(); ++k) {
        const double t = static_cast<double>(g.window_offset(f, k)) / g.sampling_rate_hz;
        out.push_back(noise_coverage(t, g.window_s()) >= fraction ? Validity::Noise : Validity::Valid);
      }
    }
    return out;
  }

  FrameLabels frame_labels() const {
    FrameLabels l;
    for (std::size_t f = 1; f < frame_count; ++f) {
      const bool fst = std::find(fst_frames.begin(), fst_frames.end(), f) != fst_frames.end();
      l.labels.push_back(fst ? FstLabel::FST : FstLabel::NFST);
    }
    return l;
  }
};

inline void validate_synth(const SynthSettings& s, double frame_s) {
  if (!(s.fs > 0.0)) throw ConfigError("synth.fs must be > 0");
  if (!(s.duration_s >= 2.0 * frame_s)) throw ConfigError("synth.duration_s must cover at least 2 frames");
  if (!(s.carrier_low_hz > 0.0 && s.carrier_low_hz < s.carrier_high_hz && s.carrier_high_hz < s.fs / 2.0)) {
    throw ConfigError("synth carrier band must satisfy 0 < low < high < fs/2");
  }
  if (!(s.rms_min_uv > 0.0 && s.rms_min_uv <= s.rms_max_uv)) throw ConfigError("synth rms range invalid");
  if (s.frame_drift < 0.0 || s.frame_drift >= 1.0) throw ConfigError("synth.frame_drift must be in [0, 1)");
  if (s.wave_width == 0) throw ConfigError("synth.wave_width must be >= 1");
  if (s.sofi_start < 0.0 || s.sofi_start + static_cast<double>(s.fst_events) > 10.0) {
    throw ConfigError("synth: sofi_start + fst_events must stay within [0, 10]");
  }
  const auto frames = static_cast<std::size_t>(s.duration_s / frame_s);
  if (s.fst_events > 0 && (s.fst_events - 1) * (s.wave_width + 1) + s.wave_width > frames - 1) {
    throw ConfigError("synth: too many FST events for the session length");
  }
  for (auto [lo, hi] : {std::pair{s.flat_min_s, s.flat_max_s}, std::pair{s.artifact_min_s, s.artifact_max_s},
                        std::pair{s.rub_min_s, s.rub_max_s}}) {
    if (!(lo > 0.0 && lo <= hi && hi < s.duration_s)) throw ConfigError("synth event length range invalid");
  }
  if (s.noise_truth_fraction <= 0.0 || s.noise_truth_fraction > 1.0) {
    throw ConfigError("synth.noise_truth_fraction must be in (0, 1]");
  }
  if (s.positive_fraction < 0.0 || s.positive_fraction > 1.0 || s.positive_span_s > frame_s) {
    throw ConfigError("synth positive span settings invalid");
  }
}

/// Apply noise events in place. Samples outside every event are untouched.
inline void inject_noise(SignalRecord& signal, std::span<const NoiseEvent> events) {
  const double fs = signal.sampling_rate_hz;
  const double duration = signal.duration_s();
  for (const auto& e : events) {
    if (!(e.start_s >= 0.0 && e.end_s > e.start_s && e.end_s <= duration)) {
      throw DataError("noise event [" + format_double(e.start_s) + ", " + format_double(e.end_s) +
                      ") outside the signal");
    }
    const auto a = static_cast<std::size_t>(std::llround(e.start_s * fs));
    const auto b = std::min(signal.samples.size(), static_cast<std::size_t>(std::llround(e.end_s * fs)));
    const auto n = b - a;
    Rng rng(e.seed);
    switch (e.kind) {
      case NoiseKind::FlatLoss:
        std::fill(signal.samples.begin() + static_cast<std::ptrdiff_t>(a),
                  signal.samples.begin() + static_cast<std::ptrdiff_t>(b), e.scale_uv);
        break;
      case NoiseKind::Artifact: {
        std::array<double, 3> freq{}, phase{};
        for (std::size_t k = 0; k < 3; ++k) {
          freq[k] = rng.uniform(1.0, 15.0);
          phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        const double ramp = std::min(0.5 * fs, 0.5 * static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
          const double t = static_cast<double>(i) / fs;
          const double edge = std::min(static_cast<double>(i), static_cast<double>(n - 1 - i));
          const double taper = edge < ramp ? 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp) : 1.0;
          double slow = 0.0;
          for (std::size_t k = 0; k < 3; ++k) slow += std::sin(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
          auto& x = signal.samples[a + i];
          x += taper * ((e.gain - 1.0) * x + e.gain * e.scale_uv * slow);
        }
        break;
      }
      case NoiseKind::FingerRub: {
        // Poisson spike train, ~50 spikes/s, each a short decaying pulse.
        double t = -std::log(1.0 - rng.uniform()) / 50.0;
        while (t * fs < static_cast<double>(n)) {
          const auto s = static_cast<std::size_t>(t * fs);
          const double amp = e.gain * e.scale_uv * (rng.uniform() < 0.5 ? -1.0 : 1.0) * (1.0 + rng.uniform());
          for (std::size_t j = 0; j < 5 && s + j < n; ++j) {
            signal.samples[a + s + j] += amp * std::exp(-static_cast<double>(j));
          }
          t += -std::log(1.0 - rng.uniform()) / 50.0;
        }
        break;
      }
    }
  }
}

struct SynthSession {
  SignalRecord signal;
  GroundTruth truth;
};

namespace detail {

inline bool overlaps_any(double a, double b, std::span<const NoiseEvent> events, double gap) {
  for (const auto& e : events) {
    if (a < e.end_s + gap && e.start_s < b + gap) return true;
  }
  return false;
}

}  // namespace detail

/// One session. `frame_s` fixes the frame grid the FST events and SOFI
/// entries align to.
inline SynthSession generate_session(const SynthSettings& s, double frame_s, std::uint64_t seed,
                                     std::string session_id = "session") {
  validate_synth(s, frame_s);
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(s.duration_s * s.fs));
  const auto frame_samples = static_cast<std::size_t>(std::llround(frame_s * s.fs));
  const std::size_t frames = n / frame_samples;

  SynthSession out;
  auto& truth = out.truth;
  truth.frame_count = frames;
  truth.session_rms_uv = rng.uniform(s.rms_min_uv, s.rms_max_uv);

  // Carrier: white noise through the carrier band-pass, 1 s warm-up dropped.
  const auto warm = static_cast<std::size_t>(s.fs);
  std::vector<double> white(n + warm);
  for (auto& v : white) v = rng.normal();
  const auto carrier_filter = design_bandpass({4, s.carrier_low_hz, s.carrier_high_hz, s.fs});
  auto carrier = apply_filter(carrier_filter, white);
  carrier.erase(carrier.begin(), carrier.begin() + static_cast<std::ptrdiff_t>(warm));
  double power = 0.0;
  for (double v : carrier) power += v * v;
  const double norm = 1.0 / std::sqrt(power / static_cast<double>(n));

  // FST frames: distinct, >= 1, separated by at least one NFST frame.
  std::vector<std::size_t> fst;
  while (fst.size() < s.fst_events) {
    const std::size_t f = 1 + rng.index(frames - 1);
    bool ok = f + s.wave_width <= frames;
    for (auto g : fst) ok = ok && (f > g + s.wave_width || g > f + s.wave_width);
    if (ok) fst.push_back(f);
  }
  std::sort(fst.begin(), fst.end());
  truth.fst_frames = fst;

  std::vector<double> amplitude(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    amplitude[f] = truth.session_rms_uv * (1.0 + s.frame_drift * rng.uniform(-1.0, 1.0));
  }
  for (auto f : fst) {
    for (std::size_t w = 0; w < s.wave_width && f + w < frames; ++w) amplitude[f + w] *= 1.0 + s.wave_depth;
  }

  out.signal.session_id = std::move(session_id);
  out.signal.sampling_rate_hz = s.fs;
  out.signal.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = std::min(i / frame_samples, frames - 1);
    out.signal.samples[i] = amplitude[f] * norm * carrier[i];
  }

  double score = s.sofi_start;
  for (std::size_t f = 0; f < frames; ++f) {
    if (std::find(fst.begin(), fst.end(), f) != fst.end()) score += 1.0;
    truth.sofi.entries.push_back({static_cast<double>(f) * frame_s, score});
  }

  // Noise events, mutually non-overlapping across all kinds.
  auto place = [&](NoiseKind kind, std::size_t count, double lo, double hi, double gain) {
    for (std::size_t k = 0; k < count; ++k) {
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const double len = rng.uniform(lo, hi);
        const double start = rng.uniform(1.0, s.duration_s - len - 1.0);
        if (detail::overlaps_any(start, start + len, truth.events, 1.0)) continue;
        NoiseEvent e{kind, start, start + len, truth.session_rms_uv, gain, rng.next()};
        if (kind == NoiseKind::FlatLoss) e.scale_uv = rng.uniform(-1.0, 1.0) * truth.session_rms_uv;
        truth.events.push_back(e);
        break;
      }
    }
  };
  place(NoiseKind::FlatLoss, s.flat_events, s.flat_min_s, s.flat_max_s, 1.0);
  place(NoiseKind::Artifact, s.artifact_events, s.artifact_min_s, s.artifact_max_s, s.artifact_gain);
  place(NoiseKind::FingerRub, s.rub_events, s.rub_min_s, s.rub_max_s, s.rub_gain);
  std::sort(truth.events.begin(), truth.events.end(),
            [](const NoiseEvent& a, const NoiseEvent& b) { return a.start_s < b.start_s; });
  inject_noise(out.signal, truth.events);

  // Labeled valid spans, inside single frames, clear of noise.
  const auto n_pos = static_cast<std::size_t>(std::llround(s.positive_fraction * static_cast<double>(frames)));
  std::vector<std::size_t> order(frames);
  for (std::size_t f = 0; f < frames; ++f) order[f] = f;
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k = 0; k < frames && truth.positives.size() < n_pos; ++k) {
    const double frame_start = static_cast<double>(order[k]) * frame_s;
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double start = frame_start + rng.uniform(0.0, frame_s - s.positive_span_s);
      if (detail::overlaps_any(start, start + s.positive_span_s, truth.events, 1.0)) continue;
      truth.positives.push_back({start, start + s.positive_span_s});
      break;
    }
  }
  std::sort(truth.positives.begin(), truth.positives.end(),
            [](const PositiveSpan& a, const PositiveSpan& b) { return a.start_s < b.start_s; });
  return out;
}

/// Session `index` of a seeded corpus.
inline SynthSession generate_corpus_session(const SynthSettings& s, double frame_s, std::uint64_t seed,
                                            std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "session_%02zu", index);
  return generate_session(s, frame_s, derive_seed(seed, "synth", index), name);
}

// ---------------------------------------------------------------------------
// Files

inline std::string positives_csv_text(std::span<const PositiveSpan> spans) {
  std::string out = "start_s,end_s\n";
  for (const auto& p : spans) out += format_double(p.start_s) + "," + format_double(p.end_s) + "\n";
  return out;
}

inline std::vector<PositiveSpan> load_positives_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, {"start_s", "end_s"});
  std::vector<PositiveSpan> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (!(r[1] > r[0])) {
      throw DataError(path.string() + ": line " + std::to_string(table.line_numbers[i]) + ": end_s must exceed start_s");
    }
    out.push_back({r[0], r[1]});
  }
  return out;
}

inline std::string valid_truth_csv_text(const WindowGeometry& g, std::span<const Validity> truth) {
  std::string out = "frame_index,sub_index,valid_truth\n";
  const std::size_t per = g.windows_per_frame();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out += std::to_string(i / per) + "," + std::to_string(i % per) + "," +
           (truth[i] == Validity::Valid ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string fst_truth_csv_text(const FrameLabels& labels) {
  std::string out = "frame_index,fst_truth\n";
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    out += std::to_string(i + 1) + "," + (labels.labels[i] == FstLabel::FST ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string events_csv_text(std::span<const NoiseEvent> events) {
  std::string out = "kind,start_s,end_s\n";
  for (const auto& e : events) {
    out += std::string(to_string(e.kind)) + "," + format_double(e.start_s) + "," + format_double(e.end_s) + "\n";
  }
  return out;
}

}  // namespace wheelsense
