#pragma once

// FST/NFST classifier: weighted forest presets, impurity importances,
// cumulative-importance feature pruning and Pearson collinearity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "features.hpp"
#include "forest.hpp"
#include "io_config.hpp"
#include "random.hpp"

namespace wheelsense {

inline ForestParams forest_preset(std::string_view name) {
  ForestParams p;
  if (name == "pre_prune") {
    p.n_trees = 5;
    p.max_depth = 25;
  } else if (name == "post_prune") {
    p.n_trees = 15;
    p.max_depth = 20;
  } else {
    throw ConfigError("unknown forest preset '" + std::string(name) + "' (expected pre_prune or post_prune)");
  }
  return p;
}

struct ImportanceReport {
  std::vector<std::string> names;
  std::vector<double> importance;     // by feature index
  std::vector<std::size_t> order;     // descending importance, ties by index
  std::vector<double> cumulative;     // along `order`
  bool degenerate = false;            // no split anywhere: all zeros

  static ImportanceReport from(std::vector<double> importance, std::vector<std::string> names) {
    ImportanceReport r;
    r.names = std::move(names);
    r.importance = std::move(importance);
    r.order.resize(r.importance.size());
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](auto a, auto b) { return r.importance[a] > r.importance[b]; });
    double acc = 0.0;
    for (auto i : r.order) {
      acc += r.importance[i];
      r.cumulative.push_back(acc);
    }
    r.degenerate = !(acc > 0.0);
    return r;
  }

  std::string csv_text() const {
    std::string out = "rank,feature_index,feature,importance,cumulative\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto i = order[k];
      out += std::to_string(k + 1) + "," + std::to_string(i) + "," + (i < names.size() ? names[i] : "") + "," +
             format_double(importance[i]) + "," + format_double(cumulative[k]) + "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    return {{"format", "wheelsense.importance"}, {"version", 1},      {"names", names},
            {"importance", importance},          {"order", order},    {"cumulative", cumulative},
            {"degenerate", degenerate}};
  }
};

/// Shortest prefix of the descending-importance order whose cumulative
/// importance reaches `threshold`; zero-importance features are never
/// selected. Returned indices are ascending.
inline std::vector<std::size_t> cumulative_prune(const ImportanceReport& report, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("cumulative_prune: threshold must be in (0, 1]");
  std::vector<std::size_t> out;
  double acc = 0.0;
  for (auto i : report.order) {
    if (!(report.importance[i] > 0.0)) break;
    out.push_back(i);
    acc += report.importance[i];
    if (acc >= threshold - 1e-12) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct CorrelationMatrix {
  std::size_t size = 0;
  std::vector<double> values;           // row-major size x size
  std::vector<std::size_t> zero_variance;

  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

/// Pairwise Pearson correlation of the columns of `x`. Zero-variance columns
/// correlate 0 with everything, themselves included, and are listed.
inline CorrelationMatrix pearson_matrix(const Matrix& x) {
  if (x.rows < 2) throw DataError("pearson_matrix: need at least 2 rows");
  const std::size_t p = x.cols;
  std::vector<double> mean(p, 0.0), norm(p, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < p; ++c) mean[c] += x(r, c);
  for (auto& m : mean) m /= static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < p; ++c) norm[c] += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
  CorrelationMatrix out;
  out.size = p;
  out.values.assign(p * p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    if (!(norm[c] > 0.0)) out.zero_variance.push_back(c);
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (!(norm[i] > 0.0)) continue;
    out.values[i * p + i] = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (!(norm[j] > 0.0)) continue;
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) s += (x(r, i) - mean[i]) * (x(r, j) - mean[j]);
      const double v = std::clamp(s / std::sqrt(norm[i] * norm[j]), -1.0, 1.0);
      out.values[i * p + j] = v;
      out.values[j * p + i] = v;
    }
  }
  return out;
}

struct FstPrediction {
  FstLabel label = FstLabel::NFST;
  double fst_fraction = 0.0;
};

struct FstModel {
  static constexpr int kVersion = 1;

  std::string preset = "post_prune";
  std::uint64_t seed = 0;
  double prune_threshold = 0.0;
  std::vector<std::string> feature_names;   // all input columns
  std::vector<std::size_t> selected;        // columns fed to the forest
  ImportanceReport importance;              // from the independent forest
  Forest forest;

  std::size_t input_width() const { return feature_names.size(); }

  /// Majority vote; an exact tie predicts FST.
  FstPrediction predict(std::span<const double> x) const {
    if (x.size() != input_width()) {
      throw std::invalid_argument("fst model: expected " + std::to_string(input_width()) + " features, got " +
                                  std::to_string(x.size()));
    }
    std::vector<double> sub(selected.size());
    for (std::size_t k = 0; k < selected.size(); ++k) sub[k] = x[selected[k]];
    const auto v = forest.votes(sub);
    const std::size_t total = v[0] + v[1];
    FstPrediction p;
    p.fst_fraction = total ? static_cast<double>(v[1]) / static_cast<double>(total) : 0.0;
    p.label = 2 * v[1] >= total ? FstLabel::FST : FstLabel::NFST;
    return p;
  }

  /// Importances of the final forest, expanded to all input columns.
  ImportanceReport final_importances() const {
    std::vector<double> full(input_width(), 0.0);
    const auto imp = forest.importances();
    for (std::size_t k = 0; k < selected.size(); ++k) full[selected[k]] = imp[k];
    return ImportanceReport::from(std::move(full), feature_names);
  }

  nlohmann::json to_json() const {
    return {{"format", "wheelsense.fst"},
            {"version", kVersion},
            {"preset", preset},
            {"seed", seed},
            {"prune_threshold", prune_threshold},
            {"feature_names", feature_names},
            {"selected", selected},
            {"importance", importance.to_json()},
            {"forest", forest.to_json()}};
  }

  static FstModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "wheelsense.fst") throw DataError("not an fst model document");
      if (j.at("version").get<int>() != kVersion) throw DataError("unsupported fst model version");
      FstModel m;
      m.preset = j.at("preset").get<std::string>();
      m.seed = j.at("seed").get<std::uint64_t>();
      m.prune_threshold = j.at("prune_threshold").get<double>();
      m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
      m.selected = j.at("selected").get<std::vector<std::size_t>>();
      m.importance = ImportanceReport::from(j.at("importance").at("importance").get<std::vector<double>>(),
                                            j.at("importance").at("names").get<std::vector<std::string>>());
      m.forest = Forest::from_json(j.at("forest"));
      if (m.forest.class_count() != 2 || m.forest.feature_count() != m.selected.size()) {
        throw DataError("fst model: forest shape mismatch");
      }
      for (auto s : m.selected) {
        if (s >= m.feature_names.size()) throw DataError("fst model: selected feature out of range");
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("fst model: ") + e.what());
    }
  }
};

/// Plain weighted forest on FST/NFST labels (class 1 = FST).
inline Forest train_forest(const Matrix& x, std::span<const FstLabel> y, std::span<const double> weights,
                           const ForestParams& params, std::uint64_t seed) {
  std::vector<std::size_t> cls(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) cls[i] = y[i] == FstLabel::FST ? 1 : 0;
  return Forest::train(x, cls, weights, 2, params, seed);
}

inline ImportanceReport feature_importances(const Forest& forest, std::vector<std::string> names) {
  if (names.size() != forest.feature_count()) throw std::invalid_argument("feature_importances: name count mismatch");
  return ImportanceReport::from(forest.importances(), std::move(names));
}

/// Importance forest (independent seed) -> cumulative pruning -> final forest
/// on the selected columns. A zero threshold keeps every column.
inline FstModel train_fst_model(const Matrix& x, std::span<const FstLabel> y, std::span<const double> weights,
                                std::vector<std::string> names, const ForestSettings& settings, std::uint64_t seed) {
  if (names.size() != x.cols) throw std::invalid_argument("train_fst_model: name count mismatch");
  FstModel m;
  m.preset = settings.preset;
  m.seed = seed;
  m.prune_threshold = settings.prune_threshold;
  m.feature_names = names;

  const auto params = forest_preset(settings.preset);
  ForestParams imp_params = params;
  imp_params.n_trees = settings.importance_trees;
  const auto imp_forest = train_forest(x, y, weights, imp_params, derive_seed(seed, "importance"));
  m.importance = feature_importances(imp_forest, names);

  if (settings.prune_threshold > 0.0 && !m.importance.degenerate) {
    m.selected = cumulative_prune(m.importance, settings.prune_threshold);
  } else {
    m.selected.resize(x.cols);
    std::iota(m.selected.begin(), m.selected.end(), 0);
  }
  m.forest = train_forest(x.select_columns(m.selected), y, weights, params, derive_seed(seed, "fst"));
  return m;
}

}  // namespace wheelsense
