#pragma once

// Session-level plumbing shared by the CLI, the sweep and the tests:
// filter -> windows -> base features -> validity -> detection points ->
// second-layer features -> FST model.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "dsp.hpp"
#include "features.hpp"
#include "fst_model.hpp"
#include "io_config.hpp"
#include "segmentation.hpp"
#include "synth.hpp"
#include "vsesm.hpp"

namespace wheelsense {

struct SessionInput {
  SignalRecord signal;  // raw
  std::optional<SofiTimeline> sofi;
  std::vector<PositiveSpan> positives;  // same time base as the signal file
};

/// `<dir>/signal.csv` plus optional `labels.csv` (SOFI) and `positives.csv`.
inline SessionInput load_session_dir(const std::filesystem::path& dir) {
  SessionInput s;
  s.signal = load_signal_csv(dir / "signal.csv");
  s.signal.session_id = dir.filename().string();
  if (std::filesystem::exists(dir / "labels.csv")) s.sofi = load_sofi_csv(dir / "labels.csv");
  if (std::filesystem::exists(dir / "positives.csv")) s.positives = load_positives_csv(dir / "positives.csv");
  return s;
}

/// Session directories under `root` (those holding signal.csv), by name.
/// A root that itself holds signal.csv is a corpus of one.
inline std::vector<std::filesystem::path> list_session_dirs(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw DataError("cannot open " + root.string() + ": not a directory");
  if (std::filesystem::exists(root / "signal.csv")) return {root};
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "signal.csv")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError(root.string() + ": no session directories with signal.csv");
  return out;
}

inline FilterSpec filter_spec(const PipelineConfig& cfg, double fs) {
  return {cfg.filter_order, cfg.low_cut_hz, cfg.high_cut_hz, fs};
}

inline SignalRecord filter_signal(const SignalRecord& raw, const PipelineConfig& cfg) {
  SignalRecord out = raw;
  out.samples = apply_filter(design_bandpass(filter_spec(cfg, raw.sampling_rate_hz)), raw.samples);
  return out;
}

/// A window is a labeled positive when it lies entirely inside one span.
inline bool inside_positive_span(double start_s, double length_s, std::span<const PositiveSpan> spans) {
  constexpr double eps = 1e-9;
  for (const auto& p : spans) {
    if (start_s >= p.start_s - eps && start_s + length_s <= p.end_s + eps) return true;
  }
  return false;
}

/// Per window: does it lie inside a labeled positive span? The nominal
/// sub-window length is used so the test needs no sampling rate.
inline std::vector<bool> positive_flags(std::span<const SubWindow> windows, double window_s,
                                        std::span<const PositiveSpan> positives) {
  std::vector<bool> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out[i] = inside_positive_span(windows[i].start_time_s, window_s, positives);
  }
  return out;
}

/// Sample-less windows rebuilt from a segment manifest.
inline std::vector<SubWindow> windows_from_segments(std::span<const SegmentRow> rows) {
  std::vector<SubWindow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.frame_index, r.sub_index, r.start_time_s, {}, r.validity});
  return out;
}

/// Detection points over windows in frame order, timed by window start.
inline DetectionResult detect_points(std::span<const SubWindow> windows) {
  auto res = select_detection_points(valid_sets(windows), WindowGeometry{});
  std::size_t w = 0;
  for (auto& p : res.points) {
    while (w < windows.size() && (windows[w].frame_index != p.frame_index || windows[w].sub_index != p.sub_index)) ++w;
    if (w == windows.size()) throw DataError("detection point without a window");
    p.time_s = windows[w].start_time_s;
  }
  return res;
}

/// Everything computed once per session and window geometry. Windows view
/// `filtered.samples`, so the object is move-only.
struct PreparedSession {
  std::string id;
  SignalRecord filtered;
  WindowGeometry geometry;
  std::size_t frame_count = 0;
  std::vector<SubWindow> windows;
  std::vector<BaseFeatureVector> features;
  std::vector<bool> labeled_positive;
  std::optional<FrameLabels> labels;

  PreparedSession() = default;
  PreparedSession(const PreparedSession&) = delete;
  PreparedSession& operator=(const PreparedSession&) = delete;
  PreparedSession(PreparedSession&&) = default;
  PreparedSession& operator=(PreparedSession&&) = default;
};

inline PreparedSession prepare_filtered(SignalRecord filtered, const std::optional<SofiTimeline>& sofi,
                                        std::span<const PositiveSpan> positives, const PipelineConfig& cfg) {
  cfg.validate();
  PreparedSession p;
  p.id = filtered.session_id;
  p.filtered = std::move(filtered);
  p.geometry = WindowGeometry::from(p.filtered.sampling_rate_hz, cfg);
  p.windows = segment_signal(p.filtered, cfg);
  p.frame_count = p.windows.empty() ? 0 : p.windows.back().frame_index + 1;
  p.features = base_features_batch(p.windows, p.filtered.sampling_rate_hz, feature_params(cfg));
  p.labeled_positive = positive_flags(p.windows, cfg.sub_window_s, positives);
  if (sofi) p.labels = derive_fst_labels(*sofi, cfg.min_delta);
  return p;
}

inline PreparedSession prepare_session(const SessionInput& in, const PipelineConfig& cfg) {
  return prepare_filtered(filter_signal(in.signal, cfg), in.sofi, in.positives, cfg);
}

/// Appends base-feature rows to the labeled-positive or unlabeled block.
/// Windows already flagged Noise are left out of both.
inline void append_vsesm_rows(Matrix& positives, Matrix& unlabeled, std::span<const SubWindow> windows,
                              std::span<const BaseFeatureVector> features, const std::vector<bool>& positive) {
  if (features.size() != windows.size() || positive.size() != windows.size()) {
    throw DataError("feature rows do not match the segment manifest");
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].validity == Validity::Noise) continue;
    (positive[i] ? positives : unlabeled).push_row(features[i]);
  }
}

inline std::pair<Matrix, Matrix> vsesm_training_rows(std::span<const PreparedSession* const> sessions) {
  Matrix pos(0, kBaseFeatureCount), unl(0, kBaseFeatureCount);
  for (const auto* s : sessions) append_vsesm_rows(pos, unl, s->windows, s->features, s->labeled_positive);
  return {std::move(pos), std::move(unl)};
}

inline VsesmModel train_vsesm_rows(const Matrix& positives, const Matrix& unlabeled, const PipelineConfig& cfg) {
  return train_vsesm(positives, unlabeled, cfg.vsesm, derive_seed(cfg.rng_seed, "vsesm"));
}

inline VsesmModel train_vsesm_sessions(std::span<const PreparedSession* const> sessions, const PipelineConfig& cfg) {
  auto [pos, unl] = vsesm_training_rows(sessions);
  return train_vsesm_rows(pos, unl, cfg);
}

inline void apply_vsesm(const VsesmModel& model, PreparedSession& s) {
  select_valid(model, s.windows, s.features);
}

inline DetectionResult session_detection_points(const PreparedSession& s) { return detect_points(s.windows); }

inline FeatureSeries feature_series(const PreparedSession& s, std::span<const DetectionPoint> points) {
  const std::size_t per = s.geometry.windows_per_frame();
  FeatureSeries out;
  for (const auto& p : points) {
    const std::size_t i = p.frame_index * per + p.sub_index;
    if (p.sub_index >= per || i >= s.windows.size()) {
      throw DataError("detection point (" + std::to_string(p.frame_index) + "," + std::to_string(p.sub_index) +
                      ") outside the session");
    }
    out.push_back({p.frame_index, p.sub_index, s.windows[i].start_time_s, s.features[i]});
  }
  return out;
}

/// Base features of the detection-point windows only, straight from the
/// filtered signal.
inline FeatureSeries point_feature_series(const SignalRecord& filtered, std::span<const DetectionPoint> points,
                                          const PipelineConfig& cfg) {
  const auto windows = segment_signal(filtered, cfg);
  const std::size_t per = WindowGeometry::from(filtered.sampling_rate_hz, cfg).windows_per_frame();
  std::vector<SubWindow> picked;
  for (const auto& p : points) {
    const std::size_t i = p.frame_index * per + p.sub_index;
    if (p.sub_index >= per || i >= windows.size()) {
      throw DataError("detection point (" + std::to_string(p.frame_index) + "," + std::to_string(p.sub_index) +
                      ") outside the session");
    }
    picked.push_back(windows[i]);
  }
  const auto features = base_features_batch(picked, filtered.sampling_rate_hz, feature_params(cfg));
  FeatureSeries out;
  for (std::size_t k = 0; k < picked.size(); ++k) {
    out.push_back({picked[k].frame_index, picked[k].sub_index, picked[k].start_time_s, features[k]});
  }
  return out;
}

/// Second-layer rows with their frame labels, where labels are known.
struct FstDataset {
  Matrix x{0, kFstFeatureCount};
  std::vector<FstLabel> y;
  std::vector<std::size_t> frame_index;
  std::vector<double> time_s;
  std::vector<std::string> session;
};

inline void append_fst_rows(FstDataset& d, const std::string& session, std::span<const FstFeatureVector> rows,
                            const std::optional<FrameLabels>& labels) {
  for (const auto& r : rows) {
    if (labels && !labels->has_frame(r.frame_index)) continue;
    d.x.push_row(r.values);
    d.y.push_back(labels ? labels->at_frame(r.frame_index) : FstLabel::NFST);
    d.frame_index.push_back(r.frame_index);
    d.time_s.push_back(r.time_s);
    d.session.push_back(session);
  }
}

inline std::vector<FstFeatureVector> session_fst_rows(const PreparedSession& s) {
  const auto dp = session_detection_points(s);
  if (dp.points.size() < 2) return {};
  return fst_features(feature_series(s, dp.points));
}

inline FstModel train_fst_rows(const FstDataset& d, const PipelineConfig& cfg) {
  if (d.y.empty()) throw DataError("no labeled FST training rows");
  const std::vector<double> w(d.y.size(), 1.0);
  return train_fst_model(d.x, d.y, w, fst_feature_names(), cfg.forest, derive_seed(cfg.rng_seed, "fst"));
}

struct PredictionRow {
  std::size_t frame_index = 0;
  double time_s = 0.0;
  double fst_fraction = 0.0;
  FstLabel label = FstLabel::NFST;
};

inline std::vector<PredictionRow> predict_rows(const FstModel& model, std::span<const FstFeatureVector> rows) {
  std::vector<PredictionRow> out;
  for (const auto& r : rows) {
    const auto p = model.predict(r.values);
    out.push_back({r.frame_index, r.time_s, p.fst_fraction, p.label});
  }
  return out;
}

inline std::string predictions_csv_text(std::span<const PredictionRow> rows) {
  std::string out = "frame_index,time_s,fst_vote_fraction,fst_pred\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame_index) + "," + format_double(r.time_s) + "," + format_fixed(r.fst_fraction, 4) +
           "," + (r.label == FstLabel::FST ? "1" : "0") + "\n";
  }
  return out;
}

inline std::vector<PredictionRow> load_predictions_csv(const std::filesystem::path& path) {
  const auto t = read_numeric_csv(path, {"frame_index", "time_s", "fst_vote_fraction", "fst_pred"});
  std::vector<PredictionRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[0] < 0 || r[0] != std::floor(r[0]) || (r[3] != 0.0 && r[3] != 1.0)) {
      throw DataError(path.string() + ": line " + std::to_string(t.line_numbers[i]) + ": malformed prediction row");
    }
    out.push_back({static_cast<std::size_t>(r[0]), r[1], r[2], r[3] == 1.0 ? FstLabel::FST : FstLabel::NFST});
  }
  return out;
}

}  // namespace wheelsense
