#pragma once

// Valid sEMG selection: cluster the labeled valid windows, mine reliable
// valid and noise windows from the unlabeled pool by isolation and
// similarity scores, then fit a confidence-weighted forest over
// {noise, cluster 1..k}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
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
#include "isolation.hpp"
#include "random.hpp"
#include "segmentation.hpp"

namespace wheelsense {

/// Linear-interpolated percentile (p in [0, 100]) of an unsorted sample.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct ZScore {
  std::vector<double> mean;
  std::vector<double> scale;

  /// Column means and population stds of `x`; zero spread gives scale 1.
  static ZScore fit(const Matrix& x) {
    if (x.rows == 0) throw DataError("z-score: no rows");
    ZScore z;
    z.mean.assign(x.cols, 0.0);
    z.scale.assign(x.cols, 0.0);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) z.mean[c] += x(r, c);
    for (auto& m : z.mean) m /= static_cast<double>(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) z.scale[c] += (x(r, c) - z.mean[c]) * (x(r, c) - z.mean[c]);
    for (auto& s : z.scale) {
      s = std::sqrt(s / static_cast<double>(x.rows));
      if (!(s > 0.0)) s = 1.0;
    }
    return z;
  }

  Matrix apply(const Matrix& x) const {
    if (x.cols != mean.size()) throw std::invalid_argument("z-score: feature count mismatch");
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Clusters

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;
  double silhouette = 0.0;

  std::pair<std::size_t, double> nearest(std::span<const double> x) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double d = 0.0;
      const auto ctr = centroids.row(c);
      for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - ctr[j]) * (x[j] - ctr[j]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return {best, std::sqrt(best_d)};
  }
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

/// k-means++ seeding then Lloyd iterations (at most 100).
inline std::pair<Matrix, std::vector<std::size_t>> kmeans(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows;
  Matrix centers(k, x.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), centers.row(c)));
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x.row(i), centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed = changed || assign[i] != best;
      assign[i] = best;
    }
    if (!changed) break;
    Matrix sums(k, x.cols);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < x.cols; ++j) sums(assign[i], j) += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < x.cols; ++j) centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return {centers, assign};
}

/// Mean silhouette over `sample` rows; a point alone in its cluster scores 0,
/// as does a point with a = b = 0.
inline double mean_silhouette(const Matrix& x, std::span<const std::size_t> assign, std::size_t k,
                              std::span<const std::size_t> sample) {
  if (k < 2) return 0.0;
  std::vector<std::size_t> sizes(k, 0);
  for (auto i : sample) ++sizes[assign[i]];
  double total = 0.0;
  std::vector<double> sum(k);
  for (auto i : sample) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (auto j : sample) {
      if (i != j) sum[assign[j]] += std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
    const auto own = assign[i];
    if (sizes[own] <= 1) continue;
    const double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
    }
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(sample.size());
}

}  // namespace detail

/// k-means with k chosen by the largest mean silhouette over [k_min, k_max]
/// (ties to the smaller k). k_max is capped at the number of descriptors.
inline ClusterModel cluster_positives(const Matrix& descriptors, std::size_t k_min, std::size_t k_max,
                                      std::uint64_t seed, std::size_t silhouette_sample = 1000) {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("cluster_positives: invalid k range");
  if (descriptors.rows < k_min) {
    throw DataError("cluster_positives: " + std::to_string(descriptors.rows) + " descriptors, need at least " +
                    std::to_string(k_min));
  }
  k_max = std::min(k_max, descriptors.rows);

  std::vector<std::size_t> sample(descriptors.rows);
  std::iota(sample.begin(), sample.end(), 0);
  if (sample.size() > silhouette_sample) {
    Rng rng(derive_seed(seed, "silhouette"));
    rng.shuffle(std::span<std::size_t>(sample));
    sample.resize(silhouette_sample);
    std::sort(sample.begin(), sample.end());
  }

  ClusterModel best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    Rng rng(derive_seed(seed, "kmeans", k));
    auto [centers, assign] = detail::kmeans(descriptors, k, rng);
    const double s = detail::mean_silhouette(descriptors, assign, k, sample);
    if (s > best_score) {
      best_score = s;
      best = {k, std::move(centers), s};
    }
  }
  return best;
}

/// -(distance to the nearest centroid).
inline std::vector<double> similarity_scores(const ClusterModel& clusters, const Matrix& descriptors) {
  std::vector<double> out(descriptors.rows);
  for (std::size_t i = 0; i < descriptors.rows; ++i) out[i] = -clusters.nearest(descriptors.row(i)).second;
  return out;
}

inline std::vector<double> isolation_scores(const IsolationForest& model, const Matrix& descriptors) {
  return model.scores(descriptors);
}

struct ReliableThresholds {
  double iso_hi = 90.0;
  double iso_lo = 50.0;
  double sim_hi = 75.0;
};

struct PseudoSample {
  std::size_t row = 0;         // index into the unlabeled batch
  bool noise = false;
  std::size_t cluster = 0;     // pseudo-valid only
  double confidence = 1.0;     // (0, 1]
};

/// Pseudo-noise: iso >= P(iso_hi). Pseudo-valid: iso <= P(iso_lo) and
/// sim >= P(sim_hi). Rows meeting both rules (only possible when the
/// percentiles coincide) and rows meeting neither are discarded.
inline std::vector<PseudoSample> filter_reliable(const Matrix& unlabeled, std::span<const double> iso,
                                                 std::span<const double> sim, const ClusterModel& clusters,
                                                 const ReliableThresholds& th) {
  if (unlabeled.rows == 0) throw DataError("filter_reliable: empty unlabeled set");
  if (iso.size() != unlabeled.rows || sim.size() != unlabeled.rows) {
    throw std::invalid_argument("filter_reliable: score length mismatch");
  }
  const double t_noise = percentile(iso, th.iso_hi);
  const double t_iso_lo = percentile(iso, th.iso_lo);
  const double t_sim = percentile(sim, th.sim_hi);
  const double iso_max = *std::max_element(iso.begin(), iso.end());
  const double sim_max = *std::max_element(sim.begin(), sim.end());

  auto margin = [](double v, double t, double top) {
    const double den = top - t;
    if (!(den > 0.0)) return 1.0;
    return std::clamp((v - t) / den, 1e-3, 1.0);
  };

  std::vector<PseudoSample> out;
  for (std::size_t i = 0; i < unlabeled.rows; ++i) {
    const bool noise = iso[i] >= t_noise;
    const bool valid = iso[i] <= t_iso_lo && sim[i] >= t_sim;
    if (noise == valid) continue;
    if (noise) {
      out.push_back({i, true, 0, margin(iso[i], t_noise, iso_max)});
    } else {
      out.push_back({i, false, clusters.nearest(unlabeled.row(i)).first, margin(sim[i], t_sim, sim_max)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

struct VsesmModel {
  static constexpr int kVersion = 1;

  ZScore zscore;
  ClusterModel clusters;
  IsolationForest isolation;
  Forest forest;  // class 0 noise, 1..k clusters
  ReliableThresholds thresholds;
  std::uint64_t seed = 0;
  bool one_class = false;
  double similarity_threshold = 0.0;  // one-class fallback only
  std::size_t pseudo_noise = 0;
  std::size_t pseudo_valid = 0;
  bool trained = false;

  Matrix descriptors(const Matrix& raw) const { return zscore.apply(raw); }

  /// Validity of each raw base-feature row.
  std::vector<Validity> classify(const Matrix& raw) const {
    if (!trained) throw std::logic_error("vsesm: untrained model");
    if (raw.rows == 0) return {};
    const Matrix z = descriptors(raw);
    std::vector<Validity> out(z.rows);
    for (std::size_t i = 0; i < z.rows; ++i) {
      if (one_class) {
        out[i] = -clusters.nearest(z.row(i)).second >= similarity_threshold ? Validity::Valid : Validity::Noise;
        continue;
      }
      const auto v = forest.votes(z.row(i));
      const std::size_t cluster_votes = std::accumulate(v.begin() + 1, v.end(), std::size_t{0});
      out[i] = cluster_votes > v[0] ? Validity::Valid : Validity::Noise;
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "wheelsense.vsesm";
    j["version"] = kVersion;
    j["seed"] = seed;
    j["feature_names"] = std::vector<std::string>(kBaseFeatureNames.begin(), kBaseFeatureNames.end());
    j["zscore"] = {{"mean", zscore.mean}, {"scale", zscore.scale}};
    j["clusters"] = {{"k", clusters.k},
                     {"dim", clusters.centroids.cols},
                     {"centroids", clusters.centroids.data},
                     {"silhouette", clusters.silhouette}};
    j["thresholds"] = {{"iso_hi", thresholds.iso_hi}, {"iso_lo", thresholds.iso_lo}, {"sim_hi", thresholds.sim_hi}};
    j["one_class"] = one_class;
    j["similarity_threshold"] = similarity_threshold;
    j["pseudo_noise"] = pseudo_noise;
    j["pseudo_valid"] = pseudo_valid;
    j["isolation"] = isolation.to_json();
    j["forest"] = forest.to_json();
    return j;
  }

  static VsesmModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "wheelsense.vsesm") throw DataError("not a vsesm model document");
      if (j.at("version").get<int>() != kVersion) throw DataError("unsupported vsesm model version");
      VsesmModel m;
      m.seed = j.at("seed").get<std::uint64_t>();
      m.zscore.mean = j.at("zscore").at("mean").get<std::vector<double>>();
      m.zscore.scale = j.at("zscore").at("scale").get<std::vector<double>>();
      const std::size_t width = m.zscore.mean.size();
      if (width == 0 || m.zscore.scale.size() != width) {
        throw DataError("vsesm model: z-score width mismatch");
      }
      const auto& c = j.at("clusters");
      m.clusters.k = c.at("k").get<std::size_t>();
      m.clusters.centroids.rows = m.clusters.k;
      m.clusters.centroids.cols = c.at("dim").get<std::size_t>();
      m.clusters.centroids.data = c.at("centroids").get<std::vector<double>>();
      m.clusters.silhouette = c.at("silhouette").get<double>();
      if (m.clusters.k == 0 || m.clusters.centroids.cols != width ||
          m.clusters.centroids.data.size() != m.clusters.k * width) {
        throw DataError("vsesm model: bad centroid block");
      }
      const auto& t = j.at("thresholds");
      m.thresholds = {t.at("iso_hi").get<double>(), t.at("iso_lo").get<double>(), t.at("sim_hi").get<double>()};
      m.one_class = j.at("one_class").get<bool>();
      m.similarity_threshold = j.at("similarity_threshold").get<double>();
      m.pseudo_noise = j.at("pseudo_noise").get<std::size_t>();
      m.pseudo_valid = j.at("pseudo_valid").get<std::size_t>();
      m.isolation = IsolationForest::from_json(j.at("isolation"));
      m.forest = Forest::from_json(j.at("forest"));
      m.trained = true;
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("vsesm model: ") + e.what());
    }
  }
};

/// Fit the forest stage. `positives` and `unlabeled` are z-scored descriptors;
/// positives take weight 1 and the class of their nearest cluster. With no
/// pseudo-noise the model falls back to a similarity threshold at the
/// `fallback_percentile` of the positives' similarity scores.
inline void train_vsesm_forest(VsesmModel& model, const Matrix& positives, const Matrix& unlabeled,
                               std::span<const PseudoSample> pseudo, const VsesmSettings& settings) {
  if (positives.rows == 0) throw DataError("vsesm: no labeled positives");
  const std::size_t noise = static_cast<std::size_t>(
      std::count_if(pseudo.begin(), pseudo.end(), [](const PseudoSample& p) { return p.noise; }));
  model.pseudo_noise = noise;
  model.pseudo_valid = pseudo.size() - noise;
  model.trained = true;
  if (noise == 0) {
    model.one_class = true;
    model.similarity_threshold = percentile(similarity_scores(model.clusters, positives), settings.fallback_percentile);
    model.forest = Forest{};
    return;
  }
  model.one_class = false;
  Matrix x(0, positives.cols);
  std::vector<std::size_t> y;
  std::vector<double> w;
  for (std::size_t i = 0; i < positives.rows; ++i) {
    x.push_row(positives.row(i));
    y.push_back(1 + model.clusters.nearest(positives.row(i)).first);
    w.push_back(1.0);
  }
  for (const auto& p : pseudo) {
    x.push_row(unlabeled.row(p.row));
    y.push_back(p.noise ? 0 : 1 + p.cluster);
    w.push_back(p.confidence);
  }
  ForestParams params;
  params.n_trees = settings.trees;
  params.max_depth = settings.max_depth;
  model.forest = Forest::train(x, y, w, 1 + model.clusters.k, params, derive_seed(model.seed, "vsesm-forest"));
}

/// Whole selection machine from raw base-feature rows of labeled valid
/// windows and of the unlabeled pool.
inline VsesmModel train_vsesm(const Matrix& positives_raw, const Matrix& unlabeled_raw, const VsesmSettings& settings,
                              std::uint64_t seed) {
  if (positives_raw.rows == 0) throw DataError("vsesm: no labeled positives");
  if (unlabeled_raw.rows == 0) throw DataError("vsesm: empty unlabeled set");
  VsesmModel m;
  m.seed = seed;
  m.thresholds = {settings.iso_hi, settings.iso_lo, settings.sim_hi};
  m.zscore = ZScore::fit(positives_raw);
  const Matrix pos = m.zscore.apply(positives_raw);
  const Matrix unl = m.zscore.apply(unlabeled_raw);

  const std::size_t k_min = std::min(settings.k_min, pos.rows);
  m.clusters = cluster_positives(pos, k_min, settings.k_max, derive_seed(seed, "vsesm-kmeans"),
                                 settings.silhouette_sample);

  Matrix pooled = pos;
  pooled.data.insert(pooled.data.end(), unl.data.begin(), unl.data.end());
  pooled.rows += unl.rows;
  m.isolation = IsolationForest::train(pooled, settings.iso_trees, settings.iso_subsample,
                                       derive_seed(seed, "vsesm-isolation"));

  const auto iso = isolation_scores(m.isolation, unl);
  const auto sim = similarity_scores(m.clusters, unl);
  const auto pseudo = filter_reliable(unl, iso, sim, m.clusters, m.thresholds);
  train_vsesm_forest(m, pos, unl, pseudo, settings);
  return m;
}

/// Set the validity of every Unknown window from its base-feature row.
/// Windows already marked keep their state.
inline void select_valid(const VsesmModel& model, std::span<SubWindow> windows,
                         std::span<const BaseFeatureVector> features) {
  if (!model.trained) throw std::logic_error("vsesm: untrained model");
  if (windows.size() != features.size()) throw std::invalid_argument("select_valid: feature count mismatch");
  Matrix raw(0, kBaseFeatureCount);
  for (const auto& f : features) raw.push_row(f);
  const auto v = model.classify(raw);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].validity == Validity::Unknown) windows[i].validity = v[i];
  }
}

}  // namespace wheelsense
