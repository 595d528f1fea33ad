// wheelsense: command-line front end for every pipeline stage.
//
// Exit status: 0 success, 1 data error, 2 usage or configuration error.

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <wheelsense/wheelsense.hpp>

namespace ws = wheelsense;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> sub_window_s;
  std::optional<double> threshold;
  std::optional<std::string> preset;
  std::vector<std::string> sets;
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::vector<std::string> positives;
  std::string points;
  std::string model;
  std::string sizes = "10,20,30,60";
  std::string output_dir = ".";
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key = value configuration file");
  sub->add_option("--seed", o.seed, "master RNG seed (overrides rng_seed)");
  sub->add_option("--sub-window-s", o.sub_window_s, "sub-window length in seconds");
  sub->add_option("--threshold", o.threshold, "cumulative-importance pruning threshold");
  sub->add_option("--preset", o.preset, "forest preset")->check(CLI::IsMember({"pre_prune", "post_prune"}));
  sub->add_option("--set", o.sets, "override one config key (key=value), repeatable");
  sub->add_option("--output-dir", o.output_dir, "directory for written artifacts");
}

ws::PipelineConfig resolve_config(const Options& o) {
  ws::PipelineConfig cfg = o.config.empty() ? ws::PipelineConfig{} : ws::load_config(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ws::ConfigError("--set expects key=value, got '" + kv + "'");
    ws::set_config_value(cfg, ws::trim(std::string_view(kv).substr(0, eq)),
                         ws::trim(std::string_view(kv).substr(eq + 1)));
  }
  if (o.seed) cfg.rng_seed = *o.seed;
  if (o.sub_window_s) cfg.sub_window_s = *o.sub_window_s;
  if (o.threshold) cfg.forest.prune_threshold = *o.threshold;
  if (o.preset) cfg.forest.preset = *o.preset;
  cfg.validate();
  return cfg;
}

void write_out(const fs::path& path, std::string_view text) {
  ws::write_text_file_atomic(path, text);
  spdlog::info("wrote {}", path.string());
}

std::string json_text(const nlohmann::json& j) { return j.dump(1) + "\n"; }

nlohmann::json load_json(const fs::path& path) {
  const auto text = ws::read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ws::DataError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

const std::string& single_input(const Options& o, const char* what) {
  if (o.inputs.size() != 1) throw CLI::ValidationError("--input", std::string("expects exactly one ") + what);
  return o.inputs.front();
}

std::vector<double> parse_sizes(const std::string& text) {
  std::vector<double> out;
  for (auto f : ws::split_fields(text)) {
    const auto v = ws::parse_double(f);
    if (!v) throw ws::ConfigError("--sizes: malformed value '" + std::string(f) + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ws::ConfigError("--sizes: no values");
  return out;
}

/// Sub-windows of a segment manifest with their base-feature rows.
struct WorkSession {
  std::vector<ws::SubWindow> windows;
  std::vector<ws::BaseFeatureVector> features;
};

WorkSession load_work_session(const fs::path& dir) {
  WorkSession w;
  w.windows = ws::windows_from_segments(ws::load_segments_csv(dir / "segments.csv"));
  const auto rows = ws::load_base_features_csv(dir / "base_features.csv");
  if (rows.size() != w.windows.size()) {
    throw ws::DataError(dir.string() + ": base_features.csv and segments.csv differ in length");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].frame_index != w.windows[i].frame_index || rows[i].sub_index != w.windows[i].sub_index) {
      throw ws::DataError(dir.string() + ": base_features.csv row " + std::to_string(i + 1) +
                          " does not match segments.csv");
    }
    w.features.push_back(rows[i].values);
  }
  return w;
}

ws::FeatureSeries all_window_rows(const std::vector<ws::SubWindow>& windows,
                                  const std::vector<ws::BaseFeatureVector>& features) {
  ws::FeatureSeries rows;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    rows.push_back({windows[i].frame_index, windows[i].sub_index, windows[i].start_time_s, features[i]});
  }
  return rows;
}

/// Attach detection-point times to second-layer rows by frame index.
void attach_times(std::vector<ws::FstFeatureVector>& rows, std::span<const ws::DetectionPoint> points) {
  std::map<std::size_t, double> t;
  for (const auto& p : points) t[p.frame_index] = p.time_s;
  for (auto& r : rows) {
    const auto it = t.find(r.frame_index);
    if (it == t.end()) throw ws::DataError("no detection point for frame " + std::to_string(r.frame_index));
    r.time_s = it->second;
  }
}

std::string eval_text(const ws::ConfusionMatrix& cm) {
  std::string out = ws::confusion_text(cm);
  out += "fst_f1 " + ws::format_fixed(ws::fst_f1(cm), 4) + "\n";
  out += "nfst_f1 " + ws::format_fixed(ws::nfst_f1(cm), 4) + "\n";
  if (cm.fst_support() && cm.nfst_support()) {
    out += "weighted_f1 " + ws::format_fixed(ws::weighted_f1(cm), 4) + "\n";
  } else {
    out += "weighted_f1 undefined (a class has zero support)\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_filter(const Options& o, const ws::PipelineConfig& cfg) {
  const auto raw = ws::load_signal_csv(single_input(o, "signal CSV"));
  const auto filtered = ws::filter_signal(raw, cfg);
  write_out(fs::path(o.output_dir) / "filtered.csv", ws::signal_csv_text(filtered));
}

void cmd_segment(const Options& o, const ws::PipelineConfig& cfg) {
  const auto signal = ws::load_signal_csv(single_input(o, "filtered signal CSV"));
  const auto windows = ws::segment_signal(signal, cfg);
  spdlog::info("{} sub-windows", windows.size());
  write_out(fs::path(o.output_dir) / "segments.csv", ws::segments_csv_text(windows));
}

void cmd_features(const Options& o, const ws::PipelineConfig& cfg) {
  const auto signal = ws::load_signal_csv(single_input(o, "filtered signal CSV"));
  const fs::path out(o.output_dir);
  if (o.points.empty()) {
    const auto windows = ws::segment_signal(signal, cfg);
    const auto features = ws::base_features_batch(windows, signal.sampling_rate_hz, ws::feature_params(cfg));
    write_out(out / "base_features.csv", ws::base_features_csv_text(all_window_rows(windows, features)));
    return;
  }
  const auto points = ws::load_detection_points_csv(o.points);
  const auto series = ws::point_feature_series(signal, points, cfg);
  write_out(out / "point_features.csv", ws::base_features_csv_text(series));
  std::vector<ws::FstFeatureVector> rows;
  if (series.size() >= 2) rows = ws::fst_features(series);
  else spdlog::warn("fewer than 2 detection points: no second-layer rows");
  write_out(out / "fst_features.csv", ws::fst_features_csv_text(rows));
}

void cmd_train_vsesm(const Options& o, const ws::PipelineConfig& cfg) {
  if (o.inputs.empty()) throw CLI::ValidationError("--input", "at least one session work directory required");
  if (o.positives.size() != o.inputs.size()) {
    throw CLI::ValidationError("--positives", "give one positives CSV per --input");
  }
  ws::Matrix pos(0, ws::kBaseFeatureCount), unl(0, ws::kBaseFeatureCount);
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const auto w = load_work_session(o.inputs[i]);
    const auto spans = ws::load_positives_csv(o.positives[i]);
    ws::append_vsesm_rows(pos, unl, w.windows, w.features, ws::positive_flags(w.windows, cfg.sub_window_s, spans));
  }
  spdlog::info("{} labeled positive and {} unlabeled windows", pos.rows, unl.rows);
  const auto model = ws::train_vsesm_rows(pos, unl, cfg);
  spdlog::info("k={} pseudo-noise={} pseudo-valid={}{}", model.clusters.k, model.pseudo_noise, model.pseudo_valid,
               model.one_class ? " (one-class)" : "");
  write_out(fs::path(o.output_dir) / "vsesm.json", json_text(model.to_json()));
}

void cmd_select_valid(const Options& o, const ws::PipelineConfig&) {
  if (o.model.empty()) throw CLI::ValidationError("--model", "vsesm model required");
  const auto model = ws::VsesmModel::from_json(load_json(o.model));
  auto w = load_work_session(single_input(o, "session work directory"));
  ws::select_valid(model, w.windows, w.features);
  write_out(fs::path(o.output_dir) / "valid_segments.csv", ws::segments_csv_text(w.windows));
}

void cmd_detect_points(const Options& o, const ws::PipelineConfig&) {
  const auto windows = ws::windows_from_segments(ws::load_segments_csv(single_input(o, "segments CSV")));
  const auto res = ws::detect_points(windows);
  for (auto f : res.skipped_frames) spdlog::warn("frame {} has no valid sub-window; skipped", f);
  write_out(fs::path(o.output_dir) / "points.csv", ws::detection_points_csv_text(res.points));
}

void cmd_train(const Options& o, const ws::PipelineConfig& cfg) {
  if (o.inputs.empty()) throw CLI::ValidationError("--input", "at least one fst_features CSV required");
  if (o.labels.size() != o.inputs.size()) throw CLI::ValidationError("--labels", "give one labels CSV per --input");
  ws::FstDataset data;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const auto rows = ws::load_fst_features_csv(o.inputs[i]);
    const auto labels = ws::load_frame_labels(o.labels[i], cfg.min_delta);
    ws::append_fst_rows(data, o.inputs[i], rows, labels);
  }
  spdlog::info("{} labeled rows", data.y.size());
  const auto model = ws::train_fst_rows(data, cfg);
  spdlog::info("{} of {} features selected", model.selected.size(), model.input_width());
  const fs::path out(o.output_dir);
  write_out(out / "fst_model.json", json_text(model.to_json()));
  write_out(out / "importance.csv", model.importance.csv_text());
}

void cmd_detect(const Options& o, const ws::PipelineConfig& cfg) {
  if (o.model.empty()) throw CLI::ValidationError("--model", "fst model required");
  const auto model = ws::FstModel::from_json(load_json(o.model));
  auto rows = ws::load_fst_features_csv(single_input(o, "fst_features CSV"));
  if (!o.points.empty()) {
    attach_times(rows, ws::load_detection_points_csv(o.points));
  } else {
    for (auto& r : rows) r.time_s = static_cast<double>(r.frame_index) * cfg.frame_s;
  }
  write_out(fs::path(o.output_dir) / "predictions.csv", ws::predictions_csv_text(ws::predict_rows(model, rows)));
}

void cmd_eval(const Options& o, const ws::PipelineConfig& cfg) {
  if (o.inputs.empty()) throw CLI::ValidationError("--input", "at least one predictions CSV required");
  if (o.labels.size() != o.inputs.size()) throw CLI::ValidationError("--labels", "give one labels CSV per --input");
  ws::ConfusionMatrix cm;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const auto rows = ws::load_predictions_csv(o.inputs[i]);
    if (rows.empty()) throw ws::DataError(o.inputs[i] + ": no predictions");
    cm += ws::score_predictions(rows, ws::load_frame_labels(o.labels[i], cfg.min_delta));
  }
  std::cout << eval_text(cm);
}

void cmd_sweep(const Options& o, const ws::PipelineConfig& cfg) {
  const auto sizes = parse_sizes(o.sizes);
  std::vector<ws::SessionInput> data;
  for (const auto& dir : ws::list_session_dirs(single_input(o, "corpus directory"))) {
    data.push_back(ws::load_session_dir(dir));
  }
  const auto rows = ws::sweep_subwindow(data, sizes, cfg);
  for (const auto& r : rows) spdlog::info("size {} s: weighted F1 {:.4f}", r.size_s, r.weighted_f1);
  write_out(fs::path(o.output_dir) / "sweep.csv", ws::sweep_csv_text(rows));
}

void cmd_synth(const Options& o, const ws::PipelineConfig& cfg) {
  ws::validate_synth(cfg.synth, cfg.frame_s);
  const fs::path out(o.output_dir);
  const auto geometry = ws::WindowGeometry::from(cfg.synth.fs, cfg);
  for (std::size_t i = 0; i < cfg.synth.sessions; ++i) {
    const auto s = ws::generate_corpus_session(cfg.synth, cfg.frame_s, cfg.rng_seed, i);
    const fs::path dir = out / s.signal.session_id;
    write_out(dir / "signal.csv", ws::signal_csv_text(s.signal));
    ws::write_sofi_csv(dir / "labels.csv", s.truth.sofi);
    write_out(dir / "positives.csv", ws::positives_csv_text(s.truth.positives));
    write_out(dir / "valid_truth.csv",
              ws::valid_truth_csv_text(geometry, s.truth.window_truth(geometry, cfg.synth.noise_truth_fraction)));
    write_out(dir / "fst_truth.csv", ws::fst_truth_csv_text(s.truth.frame_labels()));
    write_out(dir / "events.csv", ws::events_csv_text(s.truth.events));
  }
  const auto text = ws::config_text(cfg);
  write_out(out / "config.txt", text);
  std::cout << text;
}

void cmd_run_all(const Options& o, const ws::PipelineConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const fs::path out(o.output_dir);
  nlohmann::json timings = nlohmann::json::object();
  std::vector<fs::path> artifacts;
  auto t0 = clock::now();
  auto lap = [&](const char* stage) {
    const auto now = clock::now();
    timings[stage] = std::chrono::duration<double>(now - t0).count();
    t0 = now;
  };
  auto emit = [&](const fs::path& path, std::string_view text) {
    write_out(path, text);
    artifacts.push_back(path);
  };

  std::vector<ws::SessionInput> inputs;
  if (o.inputs.empty()) {
    ws::validate_synth(cfg.synth, cfg.frame_s);
    for (std::size_t i = 0; i < cfg.synth.sessions; ++i) {
      auto s = ws::generate_corpus_session(cfg.synth, cfg.frame_s, cfg.rng_seed, i);
      inputs.push_back({std::move(s.signal), s.truth.sofi, s.truth.positives});
    }
    lap("synth");
  } else {
    for (const auto& dir : ws::list_session_dirs(single_input(o, "corpus directory"))) {
      inputs.push_back(ws::load_session_dir(dir));
    }
    lap("load");
  }
  if (inputs.size() <= cfg.test_sessions) {
    throw ws::DataError("run-all: " + std::to_string(inputs.size()) + " sessions leave none for training (test_sessions = " +
                        std::to_string(cfg.test_sessions) + ")");
  }
  const std::size_t n_train = inputs.size() - cfg.test_sessions;

  std::vector<ws::PreparedSession> sessions;
  for (auto& in : inputs) {
    spdlog::info("preparing {}", in.signal.session_id);
    sessions.push_back(ws::prepare_session(in, cfg));
    in.signal.samples = {};
    const auto& s = sessions.back();
    emit(out / s.id / "segments.csv", ws::segments_csv_text(s.windows));
    emit(out / s.id / "base_features.csv", ws::base_features_csv_text(all_window_rows(s.windows, s.features)));
  }
  lap("prepare");

  std::vector<const ws::PreparedSession*> train;
  for (std::size_t i = 0; i < n_train; ++i) train.push_back(&sessions[i]);
  const auto vsesm = ws::train_vsesm_sessions(train, cfg);
  emit(out / "vsesm.json", json_text(vsesm.to_json()));
  lap("train_vsesm");

  std::vector<std::vector<ws::FstFeatureVector>> fst_rows(sessions.size());
  std::vector<ws::DetectionResult> points(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    auto& s = sessions[i];
    ws::apply_vsesm(vsesm, s);
    emit(out / s.id / "valid_segments.csv", ws::segments_csv_text(s.windows));
    points[i] = ws::session_detection_points(s);
    for (auto f : points[i].skipped_frames) spdlog::warn("{}: frame {} has no valid sub-window; skipped", s.id, f);
    emit(out / s.id / "points.csv", ws::detection_points_csv_text(points[i].points));
    if (points[i].points.size() >= 2) fst_rows[i] = ws::fst_features(ws::feature_series(s, points[i].points));
    emit(out / s.id / "fst_features.csv", ws::fst_features_csv_text(fst_rows[i]));
  }
  lap("select_and_points");

  ws::FstDataset data;
  for (std::size_t i = 0; i < n_train; ++i) ws::append_fst_rows(data, sessions[i].id, fst_rows[i], sessions[i].labels);
  const auto model = ws::train_fst_rows(data, cfg);
  emit(out / "fst_model.json", json_text(model.to_json()));
  emit(out / "importance.csv", model.importance.csv_text());
  lap("train_fst");

  ws::ConfusionMatrix cm;
  bool scored = false;
  for (std::size_t i = n_train; i < sessions.size(); ++i) {
    const auto rows = ws::predict_rows(model, fst_rows[i]);
    emit(out / sessions[i].id / "predictions.csv", ws::predictions_csv_text(rows));
    if (sessions[i].labels && !rows.empty()) {
      cm += ws::score_predictions(rows, *sessions[i].labels);
      scored = true;
    }
  }
  lap("detect");

  nlohmann::json metrics = nullptr;
  if (scored) {
    const auto text = eval_text(cm);
    emit(out / "eval.txt", text);
    std::cout << text;
    metrics = {{"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}, {"tp", cm.tp}, {"fst_f1", ws::fst_f1(cm)},
               {"nfst_f1", ws::nfst_f1(cm)}};
    if (cm.fst_support() && cm.nfst_support()) metrics["weighted_f1"] = ws::weighted_f1(cm);
  }
  lap("eval");

  nlohmann::json manifest;
  manifest["format"] = "wheelsense.manifest";
  manifest["version"] = 1;
  manifest["seed"] = cfg.rng_seed;
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : ws::config_entries(cfg)) config[k] = v;
  manifest["config"] = config;
  manifest["input"] = o.inputs.empty() ? nlohmann::json("synthetic") : nlohmann::json(o.inputs.front());
  manifest["output_dir"] = out.string();
  std::vector<std::string> train_ids, test_ids;
  for (std::size_t i = 0; i < sessions.size(); ++i) (i < n_train ? train_ids : test_ids).push_back(sessions[i].id);
  manifest["train_sessions"] = train_ids;
  manifest["test_sessions"] = test_ids;
  manifest["timings_s"] = timings;
  manifest["metrics"] = metrics;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : artifacts) {
    const auto data_text = ws::read_text_file(p);
    files.push_back({{"path", fs::relative(p, out).generic_string()},
                     {"bytes", data_text.size()},
                     {"sha256", sha256_hex(data_text)}});
  }
  manifest["artifacts"] = files;
  write_out(out / "manifest.json", json_text(manifest));
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("wheelsense");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("WHEELSENSE_LOG")) {
    const std::string v(env);
    const auto level = spdlog::level::from_str(v);
    if (level == spdlog::level::off && v != "off") spdlog::warn("WHEELSENSE_LOG: unknown level '{}'", v);
    else spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"wheelsense: steering-wheel sEMG fatigue-transition pipeline"};
  app.require_subcommand(1);
  Options o;

  using Handler = void (*)(const Options&, const ws::PipelineConfig&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler h) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    commands.emplace_back(sub, h);
    return sub;
  };

  add("filter", "band-pass filter a signal CSV -> filtered.csv", cmd_filter)
      ->add_option("--input", o.inputs, "signal CSV (time_s,emg_uv)")
      ->required();
  add("segment", "frames and sub-windows -> segments.csv", cmd_segment)
      ->add_option("--input", o.inputs, "filtered signal CSV")
      ->required();
  {
    auto* sub = add("features", "base features -> base_features.csv, or second layer with --points", cmd_features);
    sub->add_option("--input", o.inputs, "filtered signal CSV")->required();
    sub->add_option("--points", o.points, "detection points CSV; writes point_features.csv and fst_features.csv");
  }
  {
    auto* sub = add("train-vsesm", "train the valid-window selector -> vsesm.json", cmd_train_vsesm);
    sub->add_option("--input", o.inputs, "session work directory with segments.csv and base_features.csv")
        ->required();
    sub->add_option("--positives", o.positives, "positives CSV (start_s,end_s), one per --input")->required();
  }
  {
    auto* sub = add("select-valid", "classify sub-windows -> valid_segments.csv", cmd_select_valid);
    sub->add_option("--model", o.model, "vsesm.json")->required();
    sub->add_option("--input", o.inputs, "session work directory")->required();
  }
  add("detect-points", "one detection point per frame -> points.csv", cmd_detect_points)
      ->add_option("--input", o.inputs, "segments CSV with validity")
      ->required();
  {
    auto* sub = add("train", "train the FST classifier -> fst_model.json, importance.csv", cmd_train);
    sub->add_option("--input", o.inputs, "fst_features CSV, repeatable")->required();
    sub->add_option("--labels", o.labels, "SOFI or fst_truth CSV, one per --input")->required();
  }
  {
    auto* sub = add("detect", "predict FST per frame -> predictions.csv", cmd_detect);
    sub->add_option("--model", o.model, "fst_model.json")->required();
    sub->add_option("--input", o.inputs, "fst_features CSV")->required();
    sub->add_option("--points", o.points, "detection points CSV for prediction times");
  }
  {
    auto* sub = add("eval", "confusion matrix and F1 scores", cmd_eval);
    sub->add_option("--input", o.inputs, "predictions CSV, repeatable")->required();
    sub->add_option("--labels", o.labels, "SOFI or fst_truth CSV, one per --input")->required();
  }
  {
    auto* sub = add("sweep", "sub-window size sweep -> sweep.csv", cmd_sweep);
    sub->add_option("--input", o.inputs, "corpus directory")->required();
    sub->add_option("--sizes", o.sizes, "comma-separated sub-window sizes in seconds");
  }
  add("synth", "generate a seeded synthetic corpus", cmd_synth);
  add("run-all", "end-to-end run with manifest", cmd_run_all)
      ->add_option("--input", o.inputs, "corpus directory (default: synthesize from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 2;
  }

  try {
    for (const auto& [sub, handler] : commands) {
      if (!sub->parsed()) continue;
      const auto cfg = resolve_config(o);
      handler(o, cfg);
    }
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ws::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
