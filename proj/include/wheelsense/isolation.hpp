#pragma once

// Isolation forest: random axis-aligned partitions of subsamples; points
// isolated in few splits score close to 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "forest.hpp"
#include "random.hpp"

namespace wheelsense {

/// Average unsuccessful-search path length in a binary search tree of n nodes.
inline double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + 0.5772156649015329) - 2.0 * m / static_cast<double>(n);
}

struct IsolationNode {
  int feature = -1;
  double split = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::size_t size = 0;  // samples reaching a leaf
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;

  double path_length(std::span<const double> x) const {
    std::size_t i = 0;
    double depth = 0.0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right);
      depth += 1.0;
    }
    return depth + average_path_length(nodes[i].size);
  }
};

class IsolationForest {
 public:
  IsolationForest() = default;

  static IsolationForest train(const Matrix& x, std::size_t n_trees, std::size_t subsample, std::uint64_t seed) {
    if (x.rows == 0) throw DataError("isolation forest: no samples");
    if (n_trees == 0 || subsample == 0) throw std::invalid_argument("isolation forest: trees and subsample must be > 0");
    IsolationForest f;
    f.features_ = x.cols;
    f.subsample_ = std::min(subsample, x.rows);
    const auto limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(f.subsample_, 2)))));
    Rng rng(seed);
    std::vector<std::size_t> pool(x.rows);
    for (std::size_t t = 0; t < n_trees; ++t) {
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t k = 0; k < f.subsample_; ++k) {
        std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
      }
      std::vector<std::size_t> idx(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(f.subsample_));
      IsolationTree tree;
      grow(tree, x, idx, 0, limit, rng);
      f.trees_.push_back(std::move(tree));
    }
    return f;
  }

  bool trained() const { return !trees_.empty(); }
  std::size_t feature_count() const { return features_; }

  /// 2^(-E[h(x)] / c(psi)), in (0, 1]; higher means more isolated.
  double score(std::span<const double> x) const {
    if (!trained()) throw std::logic_error("isolation forest: untrained model");
    if (x.size() != features_) throw std::invalid_argument("isolation forest: feature count mismatch");
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.path_length(x);
    const double mean = sum / static_cast<double>(trees_.size());
    const double c = average_path_length(subsample_);
    if (c <= 0.0) return 0.5;
    return std::exp2(-mean / c);
  }

  std::vector<double> scores(const Matrix& x) const {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = score(x.row(i));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["features"] = features_;
    j["subsample"] = subsample_;
    auto trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      std::vector<int> feature;
      std::vector<double> split;
      std::vector<std::int32_t> left, right;
      std::vector<std::size_t> size;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        split.push_back(n.split);
        left.push_back(n.left);
        right.push_back(n.right);
        size.push_back(n.size);
      }
      trees.push_back({{"feature", feature}, {"split", split}, {"left", left}, {"right", right}, {"size", size}});
    }
    j["trees"] = std::move(trees);
    return j;
  }

  static IsolationForest from_json(const nlohmann::json& j) {
    try {
      IsolationForest f;
      f.features_ = j.at("features").get<std::size_t>();
      f.subsample_ = j.at("subsample").get<std::size_t>();
      for (const auto& jt : j.at("trees")) {
        const auto feature = jt.at("feature").get<std::vector<int>>();
        const auto split = jt.at("split").get<std::vector<double>>();
        const auto left = jt.at("left").get<std::vector<std::int32_t>>();
        const auto right = jt.at("right").get<std::vector<std::int32_t>>();
        const auto size = jt.at("size").get<std::vector<std::size_t>>();
        const std::size_t n = feature.size();
        if (n == 0 || split.size() != n || left.size() != n || right.size() != n || size.size() != n) {
          throw DataError("isolation model: inconsistent tree arrays");
        }
        IsolationTree t;
        for (std::size_t i = 0; i < n; ++i) {
          if (feature[i] >= 0 && (static_cast<std::size_t>(feature[i]) >= f.features_ || left[i] <= int(i) ||
                                  right[i] <= int(i) || std::size_t(left[i]) >= n || std::size_t(right[i]) >= n)) {
            throw DataError("isolation model: bad split node");
          }
          t.nodes.push_back({feature[i], split[i], left[i], right[i], size[i]});
        }
        f.trees_.push_back(std::move(t));
      }
      return f;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("isolation model: ") + e.what());
    }
  }

 private:
  static std::int32_t grow(IsolationTree& tree, const Matrix& x, std::span<std::size_t> idx, std::size_t depth,
                           std::size_t limit, Rng& rng) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, idx.size()});
    if (idx.size() <= 1 || depth >= limit) return id;

    std::vector<std::size_t> candidates;
    std::vector<double> lo(x.cols), hi(x.cols);
    for (std::size_t f = 0; f < x.cols; ++f) {
      lo[f] = hi[f] = x(idx[0], f);
      for (auto i : idx) {
        lo[f] = std::min(lo[f], x(i, f));
        hi[f] = std::max(hi[f], x(i, f));
      }
      if (hi[f] > lo[f]) candidates.push_back(f);
    }
    if (candidates.empty()) return id;

    const auto f = candidates[rng.index(candidates.size())];
    double split = rng.uniform(lo[f], hi[f]);
    if (!(split > lo[f])) split = hi[f];
    const auto mid = std::stable_partition(idx.begin(), idx.end(), [&](auto i) { return x(i, f) < split; });
    const auto n_left = static_cast<std::size_t>(mid - idx.begin());
    const auto l = grow(tree, x, idx.first(n_left), depth + 1, limit, rng);
    const auto r = grow(tree, x, idx.subspan(n_left), depth + 1, limit, rng);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(f);
    node.split = split;
    node.left = l;
    node.right = r;
    return id;
  }

  std::size_t features_ = 0;
  std::size_t subsample_ = 0;
  std::vector<IsolationTree> trees_;
};

}  // namespace wheelsense
