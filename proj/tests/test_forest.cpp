#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include <wheelsense/fst_model.hpp>

using namespace wheelsense;

namespace {

struct Data {
  Matrix x;
  std::vector<FstLabel> y;
  std::vector<double> w;
};

Data xor_layout(std::size_t per_corner, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  Data d;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (std::size_t i = 0; i < per_corner; ++i) {
        const double row[2] = {a + jitter(g), b + jitter(g)};
        d.x.push_row(row);
        d.y.push_back((a ^ b) ? FstLabel::FST : FstLabel::NFST);
        d.w.push_back(1.0);
      }
    }
  }
  return d;
}

Data one_informative(std::size_t n, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(width);
    for (auto& v : row) v = nd(g);
    d.x.push_row(row);
    d.y.push_back(row[1] > 0.2 ? FstLabel::FST : FstLabel::NFST);
    d.w.push_back(1.0);
  }
  return d;
}

std::vector<FstLabel> predict_all(const Forest& f, const Matrix& x) {
  std::vector<FstLabel> out;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto v = f.votes(x.row(r));
    out.push_back(2 * v[1] >= v[0] + v[1] ? FstLabel::FST : FstLabel::NFST);
  }
  return out;
}

}  // namespace

TEST(Forest, FitsXor) {
  const auto d = xor_layout(25, 1);
  ForestParams p;
  p.n_trees = 15;
  p.max_depth = 8;
  p.max_features = 2;
  const auto f = train_forest(d.x, d.y, d.w, p, 3);
  EXPECT_EQ(predict_all(f, d.x), d.y);
}

TEST(Forest, ZeroWeightRowsAreIgnored) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto base = one_informative(120, 6, 100 + seed);
    auto extra = base;
    const auto junk = one_informative(40, 6, 900 + seed);
    for (std::size_t r = 0; r < junk.x.rows; ++r) {
      extra.x.push_row(junk.x.row(r));
      extra.y.push_back(junk.y[r] == FstLabel::FST ? FstLabel::NFST : FstLabel::FST);
      extra.w.push_back(0.0);
    }
    ForestParams p;
    const auto a = train_forest(base.x, base.y, base.w, p, seed);
    const auto b = train_forest(extra.x, extra.y, extra.w, p, seed);
    EXPECT_EQ(a.to_json(), b.to_json()) << "seed " << seed;
    const auto probe = one_informative(300, 6, 5000 + seed);
    EXPECT_EQ(predict_all(a, probe.x), predict_all(b, probe.x));
  }
}

TEST(Forest, SingleClassIsDegenerate) {
  auto d = one_informative(30, 3, 2);
  for (auto& y : d.y) y = FstLabel::NFST;
  const auto f = train_forest(d.x, d.y, d.w, ForestParams{}, 1);
  EXPECT_TRUE(f.degenerate());
  for (const auto& l : predict_all(f, one_informative(50, 3, 9).x)) EXPECT_EQ(l, FstLabel::NFST);
}

TEST(Forest, RejectsBadInput) {
  auto d = one_informative(20, 3, 2);
  d.x(3, 1) = std::nan("");
  EXPECT_THROW(train_forest(d.x, d.y, d.w, ForestParams{}, 1), DataError);
  d = one_informative(20, 3, 2);
  d.w.pop_back();
  EXPECT_THROW(train_forest(d.x, d.y, d.w, ForestParams{}, 1), std::invalid_argument);
  d = one_informative(20, 3, 2);
  const auto f = train_forest(d.x, d.y, d.w, ForestParams{}, 1);
  EXPECT_THROW(f.votes(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(Forest, DeterministicAndSerializable) {
  const auto d = one_informative(100, 5, 4);
  const auto a = train_forest(d.x, d.y, d.w, ForestParams{}, 77);
  const auto b = train_forest(d.x, d.y, d.w, ForestParams{}, 77);
  EXPECT_EQ(a.to_json(), b.to_json());
  const auto c = Forest::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(c.to_json(), a.to_json());
}

TEST(Forest, MemorizesAtFullDepth) {
  const auto d = one_informative(80, 4, 8);
  ForestParams p;
  p.n_trees = 25;
  p.max_depth = 40;
  p.max_features = 4;
  const auto f = train_forest(d.x, d.y, d.w, p, 5);
  EXPECT_EQ(predict_all(f, d.x), d.y);
}

TEST(Importance, InformativeFeatureRanksFirst) {
  const auto d = one_informative(300, 6, 12);
  std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
  ForestParams p;
  p.n_trees = 50;
  const auto r = feature_importances(train_forest(d.x, d.y, d.w, p, 3), names);
  EXPECT_EQ(r.order.front(), 1u);
  EXPECT_NEAR(std::accumulate(r.importance.begin(), r.importance.end(), 0.0), 1.0, 1e-9);
  for (double v : r.importance) EXPECT_GE(v, 0.0);
}

TEST(Importance, UnusedFeatureIsZero) {
  auto d = one_informative(100, 3, 6);
  for (std::size_t r = 0; r < d.x.rows; ++r) d.x(r, 2) = 1.0;
  const auto r = feature_importances(train_forest(d.x, d.y, d.w, ForestParams{}, 2), {"a", "b", "c"});
  EXPECT_EQ(r.importance[2], 0.0);
}

TEST(Prune, PrefixSums) {
  const auto r = ImportanceReport::from({0.05, 0.5, 0.15, 0.3}, {"a", "b", "c", "d"});
  EXPECT_EQ(cumulative_prune(r, 0.9), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(cumulative_prune(r, 0.5), (std::vector<std::size_t>{1}));
  EXPECT_EQ(cumulative_prune(r, 1.0), (std::vector<std::size_t>{0, 1, 2, 3}));
  const auto z = ImportanceReport::from({0.0, 0.6, 0.4}, {"a", "b", "c"});
  EXPECT_EQ(cumulative_prune(z, 1.0), (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(cumulative_prune(r, 0.0), std::invalid_argument);
}

TEST(Prune, MonotoneInThreshold) {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> imp(28);
    for (auto& v : imp) v = u(g) < 0.2 ? 0.0 : u(g);
    const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
    for (auto& v : imp) v /= s;
    const auto r = ImportanceReport::from(imp, std::vector<std::string>(28, "f"));
    std::vector<std::size_t> prev;
    for (double t : {0.5, 0.7, 0.9, 1.0}) {
      const auto cur = cumulative_prune(r, t);
      ASSERT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST(Pearson, Identities) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> nd;
  Matrix x;
  for (int i = 0; i < 50; ++i) {
    const double a = nd(g), b = nd(g);
    const double row[5] = {a, a, -a, b, 7.0};
    x.push_row(row);
  }
  const auto c = pearson_matrix(x);
  EXPECT_NEAR(c(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(c(0, 2), -1.0, 1e-12);
  EXPECT_EQ(c(4, 4), 0.0);
  EXPECT_EQ(c.zero_variance, (std::vector<std::size_t>{4}));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(c(i, j), c(j, i), 1e-12);
  }
  EXPECT_THROW(pearson_matrix(Matrix(1, 3)), DataError);
}

TEST(FstModel, TieVotesPredictFst) {
  const auto d = one_informative(100, 3, 1);
  ForestSettings s;
  s.prune_threshold = 0.0;
  auto m = train_fst_model(d.x, d.y, d.w, {"a", "b", "c"}, s, 1);
  // Two trees voting apart.
  ForestParams p;
  p.n_trees = 2;
  p.max_depth = 1;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    m.forest = train_forest(d.x, d.y, d.w, p, seed);
    for (std::size_t r = 0; r < d.x.rows; ++r) {
      const auto v = m.forest.votes(d.x.row(r));
      const auto pred = m.predict(d.x.row(r));
      EXPECT_GE(pred.fst_fraction, 0.0);
      EXPECT_LE(pred.fst_fraction, 1.0);
      if (v[0] == v[1]) {
        EXPECT_EQ(pred.label, FstLabel::FST);
        return;
      }
    }
  }
  FAIL() << "no tied vote found";
}

TEST(FstModel, PrunesAndRoundTrips) {
  const auto d = one_informative(200, 8, 31);
  ForestSettings s;
  s.prune_threshold = 0.6;
  const auto m = train_fst_model(d.x, d.y, d.w, {"a", "b", "c", "d", "e", "f", "g", "h"}, s, 4);
  EXPECT_LT(m.selected.size(), 8u);
  EXPECT_TRUE(std::find(m.selected.begin(), m.selected.end(), 1u) != m.selected.end());
  const auto back = FstModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.to_json(), m.to_json());
  for (std::size_t r = 0; r < d.x.rows; ++r) EXPECT_EQ(back.predict(d.x.row(r)).label, m.predict(d.x.row(r)).label);
  EXPECT_THROW(forest_preset("bogus"), ConfigError);
  EXPECT_EQ(forest_preset("pre_prune").n_trees, 5u);
  EXPECT_EQ(forest_preset("post_prune").n_trees, 15u);
}
