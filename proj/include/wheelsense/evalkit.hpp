#pragma once

// Confusion matrices, per-class and support-weighted F1, and the
// sub-window-size sweep.

#include <cmath>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"
#include "io_config.hpp"
#include "pipeline.hpp"

namespace wheelsense {

struct ConfusionMatrix {
  std::size_t tn = 0;  // NFST -> NFST
  std::size_t fp = 0;  // NFST -> FST
  std::size_t fn = 0;  // FST -> NFST
  std::size_t tp = 0;  // FST -> FST

  std::size_t total() const { return tn + fp + fn + tp; }
  std::size_t fst_support() const { return fn + tp; }
  std::size_t nfst_support() const { return tn + fp; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    tp += o.tp;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const FstLabel> truth, std::span<const FstLabel> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("confusion: length mismatch");
  if (truth.empty()) throw std::invalid_argument("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == FstLabel::FST, p = predicted[i] == FstLabel::FST;
    if (t) ++(p ? cm.tp : cm.fn);
    else ++(p ? cm.fp : cm.tn);
  }
  return cm;
}

namespace detail {

inline double f1_from(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp + fp == 0 || tp + fn == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace detail

/// F1 with FST as the positive class.
inline double fst_f1(const ConfusionMatrix& cm) { return detail::f1_from(cm.tp, cm.fp, cm.fn); }

/// F1 with NFST as the positive class.
inline double nfst_f1(const ConfusionMatrix& cm) { return detail::f1_from(cm.tn, cm.fn, cm.fp); }

inline double weighted_f1(const ConfusionMatrix& cm) {
  if (cm.fst_support() == 0 || cm.nfst_support() == 0) {
    throw DataError("weighted F1 undefined: a class has zero support");
  }
  const double n = static_cast<double>(cm.total());
  return (static_cast<double>(cm.nfst_support()) * nfst_f1(cm) + static_cast<double>(cm.fst_support()) * fst_f1(cm)) /
         n;
}

inline std::string confusion_text(const ConfusionMatrix& cm) {
  std::string out;
  out += "            pred NFST  pred FST\n";
  out += "true NFST   " + std::to_string(cm.tn) + std::string(11 - std::min<std::size_t>(10, std::to_string(cm.tn).size()), ' ') +
         std::to_string(cm.fp) + "\n";
  out += "true FST    " + std::to_string(cm.fn) + std::string(11 - std::min<std::size_t>(10, std::to_string(cm.fn).size()), ' ') +
         std::to_string(cm.tp) + "\n";
  return out;
}

/// `frame_index,fst_truth` (0/1) frame labels.
inline FrameLabels load_fst_truth_csv(const std::filesystem::path& path) {
  const auto t = read_numeric_csv(path, {"frame_index", "fst_truth"});
  FrameLabels l;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[0] != static_cast<double>(i + 1) || (r[1] != 0.0 && r[1] != 1.0)) {
      throw DataError(path.string() + ": line " + std::to_string(t.line_numbers[i]) +
                      ": expected consecutive frames from 1 and 0/1 truth");
    }
    l.labels.push_back(r[1] == 1.0 ? FstLabel::FST : FstLabel::NFST);
  }
  return l;
}

/// Frame labels from either a SOFI file or an fst_truth file (by header).
inline FrameLabels load_frame_labels(const std::filesystem::path& path, double min_delta) {
  const std::string text = read_text_file(path);
  const std::string_view head = trim(std::string_view(text).substr(0, text.find('\n')));
  if (head == "time_s,sofi_score") return derive_fst_labels(load_sofi_csv(path), min_delta);
  if (head == "frame_index,fst_truth") return load_fst_truth_csv(path);
  throw DataError(path.string() + ": expected a SOFI (time_s,sofi_score) or truth (frame_index,fst_truth) file");
}

/// Confusion of predictions against frame labels, matched by frame index.
inline ConfusionMatrix score_predictions(std::span<const PredictionRow> rows, const FrameLabels& labels) {
  std::vector<FstLabel> truth, pred;
  for (const auto& r : rows) {
    if (!labels.has_frame(r.frame_index)) throw DataError("no label for predicted frame " + std::to_string(r.frame_index));
    truth.push_back(labels.at_frame(r.frame_index));
    pred.push_back(r.label);
  }
  return confusion(truth, pred);
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double size_s = 0.0;
  double weighted_f1 = 0.0;
  double fst_f1 = 0.0;
  double nfst_f1 = 0.0;
  ConfusionMatrix cm;
};

/// Leave-one-session-out FST scores for each pooled confusion matrix. The
/// selection machine is trained once per size on all sessions.
inline SweepRow sweep_one(std::span<PreparedSession> sessions, const PipelineConfig& cfg) {
  if (sessions.size() < 2) throw DataError("sweep: need at least 2 sessions");
  std::vector<const PreparedSession*> all;
  for (auto& s : sessions) all.push_back(&s);
  const auto vsesm = train_vsesm_sessions(all, cfg);
  std::vector<std::vector<FstFeatureVector>> rows;
  for (auto& s : sessions) {
    apply_vsesm(vsesm, s);
    rows.push_back(session_fst_rows(s));
  }
  ConfusionMatrix cm;
  for (std::size_t held = 0; held < sessions.size(); ++held) {
    FstDataset train;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      if (i != held) append_fst_rows(train, sessions[i].id, rows[i], sessions[i].labels);
    }
    const auto model = train_fst_rows(train, cfg);
    FstDataset test;
    append_fst_rows(test, sessions[held].id, rows[held], sessions[held].labels);
    if (test.y.empty()) continue;
    std::vector<FstLabel> pred;
    for (std::size_t r = 0; r < test.x.rows; ++r) pred.push_back(model.predict(test.x.row(r)).label);
    cm += confusion(test.y, pred);
  }
  SweepRow row;
  row.size_s = cfg.sub_window_s;
  row.cm = cm;
  row.fst_f1 = fst_f1(cm);
  row.nfst_f1 = nfst_f1(cm);
  row.weighted_f1 = cm.fst_support() && cm.nfst_support() ? weighted_f1(cm) : 0.0;
  return row;
}

inline std::vector<SweepRow> sweep_subwindow(std::span<const SessionInput> dataset, std::span<const double> sizes,
                                             PipelineConfig cfg) {
  for (double s : sizes) {
    if (!(s > 0.0) || s > cfg.frame_s) {
      throw ConfigError("sweep size " + format_double(s) + " s must be in (0, frame_s]");
    }
  }
  std::vector<SweepRow> out;
  for (double s : sizes) {
    cfg.sub_window_s = s;
    std::vector<PreparedSession> prepared;
    for (const auto& in : dataset) {
      if (!in.sofi) throw DataError("sweep: session " + in.signal.session_id + " has no labels");
      prepared.push_back(prepare_session(in, cfg));
    }
    out.push_back(sweep_one(prepared, cfg));
  }
  return out;
}

inline std::string sweep_csv_text(std::span<const SweepRow> rows) {
  std::string out = "size_s,weighted_f1,fst_f1,nfst_f1\n";
  for (const auto& r : rows) {
    out += format_double(r.size_s) + "," + format_fixed(r.weighted_f1, 4) + "," + format_fixed(r.fst_f1, 4) + "," +
           format_fixed(r.nfst_f1, 4) + "\n";
  }
  return out;
}

}  // namespace wheelsense
