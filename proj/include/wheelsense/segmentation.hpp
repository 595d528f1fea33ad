#pragma once

// Dual-layer windowing: fixed non-overlapping frames, each split into
// overlapping sub-windows, plus the per-frame detection point chain.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"
#include "io_config.hpp"

namespace wheelsense {

enum class Validity : int { Unknown = 0, Valid = 1, Noise = 2 };

inline const char* to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "Valid";
    case Validity::Noise: return "Noise";
    default: return "Unknown";
  }
}

inline Validity validity_from_string(std::string_view s) {
  if (s == "Valid") return Validity::Valid;
  if (s == "Noise") return Validity::Noise;
  if (s == "Unknown") return Validity::Unknown;
  throw DataError("unknown validity '" + std::string(s) + "'");
}

/// Sample-domain geometry of the two window layers.
struct WindowGeometry {
  double sampling_rate_hz = 1000.0;
  std::size_t frame_samples = 0;
  std::size_t window_samples = 0;
  std::size_t step_samples = 0;

  static WindowGeometry from(double fs, double frame_s, double sub_window_s, double overlap_fraction) {
    if (!(sub_window_s > 0.0) || sub_window_s > frame_s) {
      throw std::invalid_argument("sub-window must be in (0, frame_s]");
    }
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
      throw std::invalid_argument("overlap fraction must be in [0, 1)");
    }
    WindowGeometry g;
    g.sampling_rate_hz = fs;
    g.frame_samples = static_cast<std::size_t>(std::llround(frame_s * fs));
    g.window_samples = static_cast<std::size_t>(std::llround(sub_window_s * fs));
    g.step_samples = static_cast<std::size_t>(std::llround(sub_window_s * (1.0 - overlap_fraction) * fs));
    if (g.window_samples == 0 || g.step_samples == 0) {
      throw std::invalid_argument("sub-window or step shorter than one sample");
    }
    return g;
  }

  static WindowGeometry from(double fs, const PipelineConfig& cfg) {
    return from(fs, cfg.frame_s, cfg.sub_window_s, cfg.overlap_fraction);
  }

  std::size_t windows_per_frame() const {
    return (frame_samples - window_samples) / step_samples + 1;
  }
  double frame_s() const { return static_cast<double>(frame_samples) / sampling_rate_hz; }
  double step_s() const { return static_cast<double>(step_samples) / sampling_rate_hz; }
  double window_s() const { return static_cast<double>(window_samples) / sampling_rate_hz; }

  /// Offset of sub-window `sub_index` of frame `frame_index` from the signal start.
  std::size_t window_offset(std::size_t frame_index, std::size_t sub_index) const {
    return frame_index * frame_samples + sub_index * step_samples;
  }
  double window_start_time(double signal_start_s, std::size_t frame_index, std::size_t sub_index) const {
    return signal_start_s + static_cast<double>(window_offset(frame_index, sub_index)) / sampling_rate_hz;
  }
};

struct Frame {
  std::size_t index = 0;
  double start_time_s = 0.0;
  std::span<const double> samples;
};

struct SubWindow {
  std::size_t frame_index = 0;
  std::size_t sub_index = 0;
  double start_time_s = 0.0;
  std::span<const double> samples;
  Validity validity = Validity::Unknown;
};

/// Consecutive frames of exactly `frame_s`; a shorter tail is discarded.
inline std::vector<Frame> segment_frames(const SignalRecord& signal, double frame_s) {
  const auto frame_samples = static_cast<std::size_t>(std::llround(frame_s * signal.sampling_rate_hz));
  if (frame_samples == 0) throw std::invalid_argument("frame shorter than one sample");
  const std::size_t count = signal.samples.size() / frame_samples;
  if (count == 0) {
    throw DataError("signal (" + format_double(signal.duration_s()) + " s) shorter than one frame (" +
                    format_double(frame_s) + " s)");
  }
  std::vector<Frame> frames;
  frames.reserve(count);
  const std::span<const double> all(signal.samples);
  for (std::size_t i = 0; i < count; ++i) {
    frames.push_back({i, signal.start_time_s + static_cast<double>(i * frame_samples) / signal.sampling_rate_hz,
                      all.subspan(i * frame_samples, frame_samples)});
  }
  return frames;
}

inline std::vector<SubWindow> segment_subwindows(const Frame& frame, double fs, double sub_window_s,
                                                 double overlap_fraction) {
  const auto g = WindowGeometry::from(fs, static_cast<double>(frame.samples.size()) / fs, sub_window_s,
                                      overlap_fraction);
  if (g.window_samples > frame.samples.size()) throw std::invalid_argument("sub-window longer than frame");
  const std::size_t count = (frame.samples.size() - g.window_samples) / g.step_samples + 1;
  std::vector<SubWindow> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back({frame.index, k, frame.start_time_s + static_cast<double>(k * g.step_samples) / fs,
                   frame.samples.subspan(k * g.step_samples, g.window_samples), Validity::Unknown});
  }
  return out;
}

/// Every sub-window of every frame, frame-major.
inline std::vector<SubWindow> segment_signal(const SignalRecord& signal, const PipelineConfig& cfg) {
  std::vector<SubWindow> out;
  for (const auto& frame : segment_frames(signal, cfg.frame_s)) {
    auto w = segment_subwindows(frame, signal.sampling_rate_hz, cfg.sub_window_s, cfg.overlap_fraction);
    out.insert(out.end(), w.begin(), w.end());
  }
  if (cfg.drop_transient && !out.empty()) {
    // The first window holds the filter start-up transient.
    out.front().validity = Validity::Noise;
  }
  return out;
}

struct FrameValidSet {
  std::size_t frame_index = 0;
  std::vector<std::size_t> valid_indices;  // strictly increasing
};

struct DetectionPoint {
  std::size_t frame_index = 0;
  std::size_t sub_index = 0;
  double time_s = 0.0;
};

struct DetectionResult {
  std::vector<DetectionPoint> points;
  std::vector<std::size_t> skipped_frames;  // frames with no valid sub-window
};

/// Group validity flags into per-frame valid sets (frames in ascending order).
inline std::vector<FrameValidSet> valid_sets(std::span<const SubWindow> windows) {
  std::vector<FrameValidSet> sets;
  for (const auto& w : windows) {
    if (sets.empty() || sets.back().frame_index != w.frame_index) {
      if (!sets.empty() && w.frame_index < sets.back().frame_index) {
        throw DataError("sub-windows not in frame order");
      }
      sets.push_back({w.frame_index, {}});
    }
    if (w.validity == Validity::Valid) {
      auto& v = sets.back().valid_indices;
      if (!v.empty() && w.sub_index <= v.back()) throw DataError("sub-window indices not increasing");
      v.push_back(w.sub_index);
    }
  }
  return sets;
}

/// Chain detection points across frames: each frame takes the valid index
/// nearest to the previously chosen one (ties to the smaller index). Frames
/// with no valid index are skipped and reported. `first` defaults to the
/// earliest valid index of the first non-empty frame.
inline DetectionResult select_detection_points(std::span<const FrameValidSet> frames,
                                               const WindowGeometry& geometry, double signal_start_s = 0.0,
                                               std::optional<DetectionPoint> first = std::nullopt) {
  DetectionResult out;
  std::optional<std::size_t> previous;
  auto place = [&](std::size_t frame, std::size_t sub) {
    out.points.push_back({frame, sub, geometry.window_start_time(signal_start_s, frame, sub)});
    previous = sub;
  };
  for (const auto& f : frames) {
    if (f.valid_indices.empty()) {
      out.skipped_frames.push_back(f.frame_index);
      continue;
    }
    if (!previous) {
      if (first) {
        if (first->frame_index != f.frame_index) {
          throw std::invalid_argument("first detection point must address the first non-empty frame");
        }
        bool found = false;
        for (auto i : f.valid_indices) found = found || i == first->sub_index;
        if (!found) throw std::invalid_argument("first detection point is not a valid index of its frame");
        place(f.frame_index, first->sub_index);
      } else {
        place(f.frame_index, f.valid_indices.front());
      }
      continue;
    }
    std::size_t best = f.valid_indices.front();
    std::size_t best_dist = SIZE_MAX;
    for (auto i : f.valid_indices) {
      const std::size_t d = i > *previous ? i - *previous : *previous - i;
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    place(f.frame_index, best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest CSV: frame_index,sub_index,start_time_s,validity

inline std::string segments_csv_text(std::span<const SubWindow> windows) {
  std::string out = "frame_index,sub_index,start_time_s,validity\n";
  for (const auto& w : windows) {
    out += std::to_string(w.frame_index) + "," + std::to_string(w.sub_index) + "," +
           format_double(w.start_time_s) + "," + to_string(w.validity) + "\n";
  }
  return out;
}

struct SegmentRow {
  std::size_t frame_index = 0;
  std::size_t sub_index = 0;
  double start_time_s = 0.0;
  Validity validity = Validity::Unknown;
};

inline std::vector<SegmentRow> load_segments_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<SegmentRow> rows;
  std::string_view rest(text);
  std::size_t line_no = 0;
  bool header = false;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (!header) {
      if (line != "frame_index,sub_index,start_time_s,validity") {
        throw DataError(path.string() + ": unexpected segments header");
      }
      header = true;
      continue;
    }
    const auto fi = f.size() == 4 ? parse_integer(f[0]) : std::nullopt;
    const auto si = f.size() == 4 ? parse_integer(f[1]) : std::nullopt;
    const auto t = f.size() == 4 ? parse_double(f[2]) : std::nullopt;
    if (!fi || !si || !t || *fi < 0 || *si < 0) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": malformed segment row");
    }
    rows.push_back({static_cast<std::size_t>(*fi), static_cast<std::size_t>(*si), *t, validity_from_string(f[3])});
  }
  if (!header) throw DataError(path.string() + ": empty segments file");
  return rows;
}

inline std::string detection_points_csv_text(std::span<const DetectionPoint> points) {
  std::string out = "frame_index,sub_index,time_s\n";
  for (const auto& p : points) {
    out += std::to_string(p.frame_index) + "," + std::to_string(p.sub_index) + "," + format_double(p.time_s) + "\n";
  }
  return out;
}

inline std::vector<DetectionPoint> load_detection_points_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, {"frame_index", "sub_index", "time_s"});
  std::vector<DetectionPoint> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r[0] < 0 || r[1] < 0 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1])) {
      throw DataError(path.string() + ": line " + std::to_string(table.line_numbers[i]) + ": bad index");
    }
    out.push_back({static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1]), r[2]});
  }
  return out;
}

}  // namespace wheelsense
