#pragma once

// Per-sample-weighted random forest over dense numeric features, multi-class.
// Sample weights scale the bootstrap counts everywhere they are used: node
// impurity, split gain and leaf class totals.

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
#include "parallel.hpp"
#include "random.hpp"

namespace wheelsense {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  void push_row(std::span<const double> values) {
    if (rows == 0 && cols == 0) cols = values.size();
    if (values.size() != cols) throw std::invalid_argument("Matrix: row width mismatch");
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
  }

  /// Rows restricted to the given columns, in the given order.
  Matrix select_columns(std::span<const std::size_t> columns) const {
    Matrix out(rows, columns.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) out(r, c) = (*this)(r, columns[c]);
    }
    return out;
  }
};

struct ForestParams {
  std::size_t n_trees = 15;
  std::size_t max_depth = 20;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0: floor(sqrt(feature count))
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> class_weight;  // leaves only

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> importance;  // raw weighted impurity decrease per feature

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  /// Majority class of the reached leaf; ties go to the higher class index.
  std::size_t predict(std::span<const double> x) const {
    const auto& w = leaf_for(x).class_weight;
    std::size_t best = 0;
    for (std::size_t c = 1; c < w.size(); ++c) {
      if (w[c] >= w[best]) best = c;
    }
    return best;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      deepest = std::max(deepest, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return deepest;
  }
};

namespace detail {

inline double entropy_bits(std::span<const double> w, double total) {
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : w) {
    if (v > 0.0) {
      const double p = v / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct TreeBuilder {
  const Matrix& x;
  std::span<const std::size_t> y;
  std::size_t classes;
  const ForestParams& params;
  std::size_t mtry;
  Rng rng;
  std::vector<double> weight;       // bootstrap count * sample weight
  std::vector<std::size_t> draws;   // bootstrap count
  DecisionTree tree;

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<double> class_totals(std::span<const std::size_t> idx) const {
    std::vector<double> w(classes, 0.0);
    for (auto i : idx) w[y[i]] += weight[i];
    return w;
  }

  Split best_split(std::span<std::size_t> idx, std::span<const double> node_w, double node_total) {
    Split best;
    const double parent = node_total * entropy_bits(node_w, node_total);
    std::vector<std::size_t> features(x.cols);
    std::iota(features.begin(), features.end(), 0);
    rng.shuffle(std::span<std::size_t>(features));

    std::vector<std::size_t> order(idx.begin(), idx.end());
    std::vector<double> left(classes), right(classes);
    std::size_t evaluated = 0;
    for (std::size_t f : features) {
      if (evaluated >= mtry) break;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        const double xa = x(a, f), xb = x(b, f);
        return xa != xb ? xa < xb : a < b;
      });
      if (x(order.front(), f) == x(order.back(), f)) continue;
      ++evaluated;

      std::fill(left.begin(), left.end(), 0.0);
      double left_total = 0.0;
      std::size_t left_draws = 0, total_draws = 0;
      for (auto i : order) total_draws += draws[i];
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto i = order[k];
        left[y[i]] += weight[i];
        left_total += weight[i];
        left_draws += draws[i];
        const double xv = x(i, f), xn = x(order[k + 1], f);
        if (xv == xn) continue;
        if (left_draws < params.min_samples_leaf || total_draws - left_draws < params.min_samples_leaf) continue;
        for (std::size_t c = 0; c < classes; ++c) right[c] = node_w[c] - left[c];
        const double right_total = node_total - left_total;
        const double child =
            left_total * entropy_bits(left, left_total) + right_total * entropy_bits(right, right_total);
        const double gain = parent - child;
        if (!best.found || gain > best.gain) {
          double thr = 0.5 * (xv + xn);
          if (!(thr < xn)) thr = xv;  // adjacent doubles
          best = {true, f, thr, gain};
        }
      }
    }
    return best;
  }

  std::int32_t grow(std::span<std::size_t> idx, std::size_t depth) {
    const auto node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto node_w = class_totals(idx);
    const double node_total = std::accumulate(node_w.begin(), node_w.end(), 0.0);
    std::size_t node_draws = 0;
    for (auto i : idx) node_draws += draws[i];
    const auto nonzero = std::count_if(node_w.begin(), node_w.end(), [](double v) { return v > 0.0; });

    auto make_leaf = [&] {
      tree.nodes[static_cast<std::size_t>(node_id)].class_weight = node_w;
      return node_id;
    };
    if (nonzero <= 1 || depth >= params.max_depth || node_draws < params.min_samples_split) return make_leaf();

    const auto split = best_split(idx, node_w, node_total);
    if (!split.found) return make_leaf();

    const auto mid = std::stable_partition(idx.begin(), idx.end(),
                                           [&](auto i) { return x(i, split.feature) <= split.threshold; });
    const auto n_left = static_cast<std::size_t>(mid - idx.begin());
    tree.importance[split.feature] += std::max(0.0, split.gain);

    const auto l = grow(idx.first(n_left), depth + 1);
    const auto r = grow(idx.subspan(n_left), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }
};

}  // namespace detail

class Forest {
 public:
  Forest() = default;

  /// Train on rows of `x` with class labels `y` in [0, classes) and
  /// nonnegative `weights`. Samples of weight 0 are ignored entirely.
  static Forest train(const Matrix& x, std::span<const std::size_t> y, std::span<const double> weights,
                      std::size_t classes, const ForestParams& params, std::uint64_t seed) {
    if (x.rows != y.size() || y.size() != weights.size()) {
      throw std::invalid_argument("forest: X, y and weights must have equal length");
    }
    if (classes < 2) throw std::invalid_argument("forest: need at least 2 classes");
    if (params.n_trees == 0) throw std::invalid_argument("forest: n_trees must be > 0");
    for (double v : x.data) {
      if (!std::isfinite(v)) throw DataError("forest: non-finite feature value");
    }
    Forest f;
    f.classes_ = classes;
    f.features_ = x.cols;
    f.params_ = params;
    f.seed_ = seed;

    std::vector<std::size_t> active;
    std::vector<double> class_weight(classes, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] >= classes) throw std::invalid_argument("forest: label out of range");
      if (weights[i] < 0.0 || !std::isfinite(weights[i])) throw DataError("forest: invalid sample weight");
      if (weights[i] > 0.0) {
        active.push_back(i);
        class_weight[y[i]] += weights[i];
      }
    }
    if (active.empty()) throw DataError("forest: no samples with positive weight");
    const auto present = std::count_if(class_weight.begin(), class_weight.end(), [](double v) { return v > 0.0; });
    if (present < 2) {
      f.degenerate_ = true;
      f.constant_class_ = y[active.front()];
      return f;
    }

    const std::size_t mtry = params.max_features > 0
                                 ? std::min(params.max_features, x.cols)
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(x.cols))));
    f.trees_.resize(params.n_trees);
    parallel_for(params.n_trees, [&](std::size_t t) {
      detail::TreeBuilder b{x, y, classes, params, mtry, Rng(derive_seed(seed, t)), {}, {}, {}};
      b.weight.assign(x.rows, 0.0);
      b.draws.assign(x.rows, 0);
      for (std::size_t k = 0; k < active.size(); ++k) ++b.draws[active[b.rng.index(active.size())]];
      std::vector<std::size_t> idx;
      for (auto i : active) {
        if (b.draws[i] > 0) {
          idx.push_back(i);
          b.weight[i] = static_cast<double>(b.draws[i]) * weights[i];
        }
      }
      b.tree.importance.assign(x.cols, 0.0);
      b.grow(idx, 0);
      f.trees_[t] = std::move(b.tree);
    });
    return f;
  }

  std::size_t class_count() const { return classes_; }
  std::size_t feature_count() const { return features_; }
  std::size_t tree_count() const { return trees_.size(); }
  bool degenerate() const { return degenerate_; }
  std::uint64_t seed() const { return seed_; }
  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// Number of trees voting for each class.
  std::vector<std::size_t> votes(std::span<const double> x) const {
    if (x.size() != features_) {
      throw std::invalid_argument("forest: expected " + std::to_string(features_) + " features, got " +
                                  std::to_string(x.size()));
    }
    std::vector<std::size_t> v(classes_, 0);
    if (degenerate_) {
      v[constant_class_] = 1;
      return v;
    }
    for (const auto& t : trees_) ++v[t.predict(x)];
    return v;
  }

  /// Per-tree mean decrease in weighted impurity, each tree normalised to 1,
  /// averaged, renormalised. All zeros when no tree ever split.
  std::vector<double> importances() const {
    std::vector<double> out(features_, 0.0);
    for (const auto& t : trees_) {
      const double s = std::accumulate(t.importance.begin(), t.importance.end(), 0.0);
      if (!(s > 0.0)) continue;
      for (std::size_t j = 0; j < features_; ++j) out[j] += t.importance[j] / s;
    }
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total > 0.0) {
      for (double& v : out) v /= total;
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["classes"] = classes_;
    j["features"] = features_;
    j["seed"] = seed_;
    j["degenerate"] = degenerate_;
    j["constant_class"] = constant_class_;
    j["params"] = {{"n_trees", params_.n_trees},
                   {"max_depth", params_.max_depth},
                   {"min_samples_split", params_.min_samples_split},
                   {"min_samples_leaf", params_.min_samples_leaf},
                   {"max_features", params_.max_features},
                   {"criterion", "entropy"}};
    auto trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json jt;
      std::vector<int> feature;
      std::vector<double> threshold;
      std::vector<std::int32_t> left, right;
      std::vector<std::vector<double>> leaf;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        leaf.push_back(n.class_weight);
      }
      jt["feature"] = feature;
      jt["threshold"] = threshold;
      jt["left"] = left;
      jt["right"] = right;
      jt["leaf_weight"] = leaf;
      jt["importance"] = t.importance;
      trees.push_back(std::move(jt));
    }
    j["trees"] = std::move(trees);
    return j;
  }

  static Forest from_json(const nlohmann::json& j) {
    try {
      Forest f;
      f.classes_ = j.at("classes").get<std::size_t>();
      f.features_ = j.at("features").get<std::size_t>();
      f.seed_ = j.at("seed").get<std::uint64_t>();
      f.degenerate_ = j.at("degenerate").get<bool>();
      f.constant_class_ = j.at("constant_class").get<std::size_t>();
      const auto& p = j.at("params");
      f.params_.n_trees = p.at("n_trees").get<std::size_t>();
      f.params_.max_depth = p.at("max_depth").get<std::size_t>();
      f.params_.min_samples_split = p.at("min_samples_split").get<std::size_t>();
      f.params_.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
      f.params_.max_features = p.at("max_features").get<std::size_t>();
      for (const auto& jt : j.at("trees")) {
        DecisionTree t;
        const auto feature = jt.at("feature").get<std::vector<int>>();
        const auto threshold = jt.at("threshold").get<std::vector<double>>();
        const auto left = jt.at("left").get<std::vector<std::int32_t>>();
        const auto right = jt.at("right").get<std::vector<std::int32_t>>();
        const auto leaf = jt.at("leaf_weight").get<std::vector<std::vector<double>>>();
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || leaf.size() != n || n == 0) {
          throw DataError("forest model: inconsistent tree arrays");
        }
        for (std::size_t i = 0; i < n; ++i) {
          TreeNode node{feature[i], threshold[i], left[i], right[i], leaf[i]};
          if (node.is_leaf()) {
            if (node.class_weight.size() != f.classes_) throw DataError("forest model: bad leaf");
          } else if (static_cast<std::size_t>(node.feature) >= f.features_ || node.left <= static_cast<int>(i) ||
                     node.right <= static_cast<int>(i) || static_cast<std::size_t>(node.left) >= n ||
                     static_cast<std::size_t>(node.right) >= n) {
            throw DataError("forest model: bad split node");
          }
          t.nodes.push_back(std::move(node));
        }
        t.importance = jt.at("importance").get<std::vector<double>>();
        if (t.importance.size() != f.features_) throw DataError("forest model: bad importance vector");
        f.trees_.push_back(std::move(t));
      }
      if (!f.degenerate_ && f.trees_.empty()) throw DataError("forest model: no trees");
      return f;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("forest model: ") + e.what());
    }
  }

 private:
  std::size_t classes_ = 0;
  std::size_t features_ = 0;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  bool degenerate_ = false;
  std::size_t constant_class_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace wheelsense
