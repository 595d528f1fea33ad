#pragma once

// Signal and label files, pipeline configuration, and FST/NFST frame labels
// derived from SOFI self-report timelines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "common.hpp"

namespace wheelsense {

/// One channel of sampled sEMG voltage (microvolts).
struct SignalRecord {
  std::string session_id;
  double sampling_rate_hz = 1000.0;
  std::vector<double> samples;
  double start_time_s = 0.0;

  double duration_s() const { return static_cast<double>(samples.size()) / sampling_rate_hz; }
};

struct SofiEntry {
  double time_s = 0.0;
  double score = 0.0;
};

/// Self-reported fatigue scores, one entry per frame boundary.
struct SofiTimeline {
  std::vector<SofiEntry> entries;

  void validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].score < 0.0 || entries[i].score > 10.0) {
        throw DataError("SOFI score out of [0,10] at entry " + std::to_string(i));
      }
      if (i > 0 && !(entries[i].time_s > entries[i - 1].time_s)) {
        throw DataError("SOFI times not strictly increasing at entry " + std::to_string(i));
      }
    }
  }
};

enum class FstLabel : int { NFST = 0, FST = 1 };

inline const char* to_string(FstLabel l) { return l == FstLabel::FST ? "FST" : "NFST"; }

/// Labels for frames 1..N-1; frame 0 has no predecessor and is dropped.
struct FrameLabels {
  std::vector<FstLabel> labels;

  /// Label of frame `frame_index` (>= 1).
  FstLabel at_frame(std::size_t frame_index) const {
    if (frame_index == 0 || frame_index > labels.size()) {
      throw DataError("no label for frame " + std::to_string(frame_index));
    }
    return labels[frame_index - 1];
  }
  bool has_frame(std::size_t frame_index) const {
    return frame_index >= 1 && frame_index <= labels.size();
  }
};

/// Frame n (n >= 1) is FST iff score(n) - score(n-1) >= min_delta.
inline FrameLabels derive_fst_labels(const SofiTimeline& timeline, double min_delta = 1.0) {
  if (timeline.entries.size() < 2) {
    throw DataError("SOFI timeline needs at least 2 entries");
  }
  FrameLabels out;
  out.labels.reserve(timeline.entries.size() - 1);
  for (std::size_t n = 1; n < timeline.entries.size(); ++n) {
    const double delta = timeline.entries[n].score - timeline.entries[n - 1].score;
    out.labels.push_back(delta >= min_delta ? FstLabel::FST : FstLabel::NFST);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

/// Load `time_s,emg_uv`. The sampling rate is inferred as 1/median(dt),
/// rounded to an integer; every interval must be within 1% of the median.
inline SignalRecord load_signal_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, {"time_s", "emg_uv"});
  if (table.rows.empty()) throw DataError(path.string() + ": no samples");
  if (table.rows.size() < 2) {
    throw DataError(path.string() + ": need at least 2 samples to infer the sampling rate");
  }
  std::vector<double> dt;
  dt.reserve(table.rows.size() - 1);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const double d = table.rows[i][0] - table.rows[i - 1][0];
    if (!(d > 0.0)) {
      throw DataError(path.string() + ": line " + std::to_string(table.line_numbers[i]) +
                      ": time not strictly increasing");
    }
    dt.push_back(d);
  }
  std::vector<double> sorted = dt;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double median = *mid;
  if (sorted.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(sorted.begin(), mid));
  }
  for (std::size_t i = 0; i < dt.size(); ++i) {
    if (std::abs(dt[i] - median) > 0.01 * median) {
      throw DataError(path.string() + ": line " + std::to_string(table.line_numbers[i + 1]) +
                      ": non-uniform sample spacing");
    }
  }
  SignalRecord rec;
  rec.session_id = path.parent_path().filename().string();
  if (rec.session_id.empty()) rec.session_id = path.stem().string();
  rec.sampling_rate_hz = std::round(1.0 / median);
  if (rec.sampling_rate_hz <= 0.0) throw DataError(path.string() + ": sampling rate rounds to 0 Hz");
  rec.start_time_s = table.rows.front()[0];
  rec.samples.reserve(table.rows.size());
  for (const auto& row : table.rows) rec.samples.push_back(row[1]);
  return rec;
}

inline std::string signal_csv_text(const SignalRecord& rec) {
  std::string out = "time_s,emg_uv\n";
  out.reserve(rec.samples.size() * 24);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    out += format_double(rec.start_time_s + static_cast<double>(i) / rec.sampling_rate_hz);
    out += ',';
    out += format_double(rec.samples[i]);
    out += '\n';
  }
  return out;
}

inline void write_signal_csv(const std::filesystem::path& path, const SignalRecord& rec) {
  write_text_file_atomic(path, signal_csv_text(rec));
}

inline SofiTimeline load_sofi_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, {"time_s", "sofi_score"});
  SofiTimeline tl;
  for (const auto& row : table.rows) tl.entries.push_back({row[0], row[1]});
  tl.validate();
  return tl;
}

inline void write_sofi_csv(const std::filesystem::path& path, const SofiTimeline& tl) {
  std::string out = "time_s,sofi_score\n";
  for (const auto& e : tl.entries) out += format_double(e.time_s) + "," + format_double(e.score) + "\n";
  write_text_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Configuration

struct VsesmSettings {
  std::size_t k_min = 2;
  std::size_t k_max = 8;
  std::size_t iso_trees = 100;
  std::size_t iso_subsample = 256;
  double iso_hi = 90.0;  // percentiles over the unlabeled batch
  double iso_lo = 50.0;
  double sim_hi = 75.0;
  std::size_t trees = 50;
  std::size_t max_depth = 25;
  std::size_t silhouette_sample = 1000;
  double fallback_percentile = 5.0;  // one-class similarity threshold
};

struct ForestSettings {
  std::string preset = "post_prune";
  double prune_threshold = 0.9;  // 0 disables cumulative-importance pruning
  std::size_t importance_trees = 50;
};

struct SynthSettings {
  std::size_t sessions = 10;
  double duration_s = 6000.0;
  double fs = 1000.0;
  double carrier_low_hz = 20.0;
  double carrier_high_hz = 150.0;
  double rms_min_uv = 30.0;
  double rms_max_uv = 80.0;
  double frame_drift = 0.05;
  std::size_t fst_events = 3;
  double wave_depth = 0.8;
  std::size_t wave_width = 1;
  std::size_t flat_events = 4;
  double flat_min_s = 120.0;
  double flat_max_s = 300.0;
  std::size_t artifact_events = 4;
  double artifact_min_s = 120.0;
  double artifact_max_s = 300.0;
  double artifact_gain = 6.0;
  std::size_t rub_events = 4;
  double rub_min_s = 2.0;
  double rub_max_s = 6.0;
  double rub_gain = 5.0;
  double noise_truth_fraction = 0.25;
  double positive_fraction = 0.3;
  double positive_span_s = 120.0;
  double sofi_start = 1.0;
};

struct PipelineConfig {
  double frame_s = 300.0;
  double sub_window_s = 30.0;
  double overlap_fraction = 0.5;
  int filter_order = 4;
  double low_cut_hz = 10.0;
  double high_cut_hz = 300.0;
  bool drop_transient = false;
  int sampen_m = 2;
  double sampen_r_factor = 0.2;
  double min_delta = 1.0;
  std::size_t test_sessions = 2;
  std::uint64_t rng_seed = 0;
  VsesmSettings vsesm;
  ForestSettings forest;
  SynthSettings synth;

  double step_s() const { return sub_window_s * (1.0 - overlap_fraction); }

  void validate() const {
    if (!(frame_s > 0.0)) throw ConfigError("frame_s must be > 0");
    if (!(sub_window_s > 0.0) || sub_window_s > frame_s) {
      throw ConfigError("sub_window_s must be in (0, frame_s]");
    }
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
      throw ConfigError("overlap_fraction must be in [0, 1)");
    }
    if (sampen_m < 1) throw ConfigError("sampen_m must be >= 1");
    if (!(sampen_r_factor > 0.0)) throw ConfigError("sampen_r_factor must be > 0");
    if (vsesm.k_min < 1 || vsesm.k_max < vsesm.k_min) throw ConfigError("invalid vsesm k range");
    if (!(vsesm.iso_lo < vsesm.iso_hi)) throw ConfigError("vsesm.iso_lo must be < vsesm.iso_hi");
    for (double p : {vsesm.iso_lo, vsesm.iso_hi, vsesm.sim_hi, vsesm.fallback_percentile}) {
      if (p < 0.0 || p > 100.0) throw ConfigError("vsesm percentiles must be in [0, 100]");
    }
    if (forest.preset != "pre_prune" && forest.preset != "post_prune") {
      throw ConfigError("forest.preset must be pre_prune or post_prune");
    }
    if (forest.prune_threshold < 0.0 || forest.prune_threshold > 1.0) {
      throw ConfigError("forest.prune_threshold must be in [0, 1]");
    }
  }
};

namespace detail {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "64-bit size_t expected");
using ConfigField = std::variant<double*, int*, bool*, std::size_t*, std::string*>;

template <typename Config, typename Fn>
void visit_config_fields(Config& c, Fn&& fn) {
  fn("frame_s", ConfigField{&c.frame_s});
  fn("sub_window_s", ConfigField{&c.sub_window_s});
  fn("overlap_fraction", ConfigField{&c.overlap_fraction});
  fn("filter_order", ConfigField{&c.filter_order});
  fn("low_cut_hz", ConfigField{&c.low_cut_hz});
  fn("high_cut_hz", ConfigField{&c.high_cut_hz});
  fn("drop_transient", ConfigField{&c.drop_transient});
  fn("sampen_m", ConfigField{&c.sampen_m});
  fn("sampen_r_factor", ConfigField{&c.sampen_r_factor});
  fn("min_delta", ConfigField{&c.min_delta});
  fn("test_sessions", ConfigField{&c.test_sessions});
  fn("rng_seed", ConfigField{&c.rng_seed});
  auto& v = c.vsesm;
  fn("vsesm.k_min", ConfigField{&v.k_min});
  fn("vsesm.k_max", ConfigField{&v.k_max});
  fn("vsesm.iso_trees", ConfigField{&v.iso_trees});
  fn("vsesm.iso_subsample", ConfigField{&v.iso_subsample});
  fn("vsesm.iso_hi", ConfigField{&v.iso_hi});
  fn("vsesm.iso_lo", ConfigField{&v.iso_lo});
  fn("vsesm.sim_hi", ConfigField{&v.sim_hi});
  fn("vsesm.trees", ConfigField{&v.trees});
  fn("vsesm.max_depth", ConfigField{&v.max_depth});
  fn("vsesm.silhouette_sample", ConfigField{&v.silhouette_sample});
  fn("vsesm.fallback_percentile", ConfigField{&v.fallback_percentile});
  auto& f = c.forest;
  fn("forest.preset", ConfigField{&f.preset});
  fn("forest.prune_threshold", ConfigField{&f.prune_threshold});
  fn("forest.importance_trees", ConfigField{&f.importance_trees});
  auto& s = c.synth;
  fn("synth.sessions", ConfigField{&s.sessions});
  fn("synth.duration_s", ConfigField{&s.duration_s});
  fn("synth.fs", ConfigField{&s.fs});
  fn("synth.carrier_low_hz", ConfigField{&s.carrier_low_hz});
  fn("synth.carrier_high_hz", ConfigField{&s.carrier_high_hz});
  fn("synth.rms_min_uv", ConfigField{&s.rms_min_uv});
  fn("synth.rms_max_uv", ConfigField{&s.rms_max_uv});
  fn("synth.frame_drift", ConfigField{&s.frame_drift});
  fn("synth.fst_events", ConfigField{&s.fst_events});
  fn("synth.wave_depth", ConfigField{&s.wave_depth});
  fn("synth.wave_width", ConfigField{&s.wave_width});
  fn("synth.flat_events", ConfigField{&s.flat_events});
  fn("synth.flat_min_s", ConfigField{&s.flat_min_s});
  fn("synth.flat_max_s", ConfigField{&s.flat_max_s});
  fn("synth.artifact_events", ConfigField{&s.artifact_events});
  fn("synth.artifact_min_s", ConfigField{&s.artifact_min_s});
  fn("synth.artifact_max_s", ConfigField{&s.artifact_max_s});
  fn("synth.artifact_gain", ConfigField{&s.artifact_gain});
  fn("synth.rub_events", ConfigField{&s.rub_events});
  fn("synth.rub_min_s", ConfigField{&s.rub_min_s});
  fn("synth.rub_max_s", ConfigField{&s.rub_max_s});
  fn("synth.rub_gain", ConfigField{&s.rub_gain});
  fn("synth.noise_truth_fraction", ConfigField{&s.noise_truth_fraction});
  fn("synth.positive_fraction", ConfigField{&s.positive_fraction});
  fn("synth.positive_span_s", ConfigField{&s.positive_span_s});
  fn("synth.sofi_start", ConfigField{&s.sofi_start});
}

}  // namespace detail

/// Set one configuration key from its text value.
inline void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  bool found = false;
  detail::visit_config_fields(cfg, [&](std::string_view name, detail::ConfigField field) {
    if (name != key) return;
    found = true;
    const std::string k(key);
    std::visit(
        [&](auto* ptr) {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, double>) {
            auto v = parse_double(value);
            if (!v) throw ConfigError(k + ": expected a number, got '" + std::string(value) + "'");
            *ptr = *v;
          } else if constexpr (std::is_same_v<T, bool>) {
            const auto t = trim(value);
            if (t == "true" || t == "1") *ptr = true;
            else if (t == "false" || t == "0") *ptr = false;
            else throw ConfigError(k + ": expected true/false, got '" + std::string(value) + "'");
          } else if constexpr (std::is_same_v<T, std::string>) {
            *ptr = std::string(trim(value));
          } else {
            auto v = parse_integer(value);
            if (!v || (!std::is_signed_v<T> && *v < 0)) {
              throw ConfigError(k + ": expected an integer, got '" + std::string(value) + "'");
            }
            *ptr = static_cast<T>(*v);
          }
        },
        field);
  });
  if (!found) throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Parse `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig cfg = {}) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

/// Ordered key -> text value for every configuration field.
inline std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  auto copy = cfg;
  detail::visit_config_fields(copy, [&](std::string_view name, detail::ConfigField field) {
    std::string value = std::visit(
        [](auto* ptr) -> std::string {
          using T = std::remove_pointer_t<decltype(ptr)>;
          if constexpr (std::is_same_v<T, double>) return format_double(*ptr);
          else if constexpr (std::is_same_v<T, bool>) return *ptr ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::string>) return *ptr;
          else return std::to_string(*ptr);
        },
        field);
    out.emplace_back(std::string(name), std::move(value));
  });
  return out;
}

inline std::string config_text(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace wheelsense
