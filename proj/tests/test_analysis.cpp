#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "rfc/analysis.hpp"
#include "rfc/errors.hpp"
#include "test_support.hpp"

using namespace rfc;

namespace {

// One tree, one split on feature 1 separating {0, 0} from {1, 1}; feature 0 unused.
Forest one_split_forest(Dataset& ds) {
  ds.feature_names = {"a", "b"};
  ds.class_names = {"x", "y"};
  for (double v : {1.0, 2.0, 3.0, 4.0}) ds.instances.append_row(std::vector<double>{5.0 - v, v});
  ds.labels = {0, 0, 1, 1};
  Forest f;
  f.class_names = ds.class_names;
  f.feature_names = ds.feature_names;
  f.train_rows = {0, 1, 2, 3};
  Tree t;
  t.bag_counts = {1, 1, 1, 1};
  Node root;
  root.kind = NodeKind::internal;
  root.split_feature = 1;
  root.split_value = 2.5;
  root.left = 1;
  root.right = 2;
  root.y_mean = ClassDistribution({0.5, 0.5});
  root.n_train = 4;
  Node l, r;
  l.y_mean = ClassDistribution::unit(0, 2);
  l.n_train = 2;
  r.y_mean = ClassDistribution::unit(1, 2);
  r.n_train = 2;
  t.nodes = {root, l, r};
  f.trees = {t};
  f.y_root_avg = root.y_mean;
  return f;
}

std::size_t index_of(const Dataset& ds, const std::string& name) {
  return static_cast<std::size_t>(std::find(ds.feature_names.begin(), ds.feature_names.end(), name) -
                                  ds.feature_names.begin());
}

}  // namespace

TEST(GiniImportance, OneSplitByHand) {
  Dataset ds;
  const Forest f = one_split_forest(ds);
  const auto imp = gini_importance(f);
  EXPECT_EQ(imp[0], 0.0);
  EXPECT_DOUBLE_EQ(imp[1], 4 * 0.5);  // n_train * (0.5 - 0)
}

TEST(GiniImportance, NonNegativeAndZeroForUnusedFeatures) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset ds = support::random_dataset(rng, 40, 5, 3);
    const Forest f = fit(ds, support::all_rows(ds), {8, 2, 1, rng.next()});
    const auto imp = gini_importance(f);
    for (std::size_t feat = 0; feat < ds.n_features(); ++feat) {
      bool used = false;
      for (const Tree& t : f.trees) {
        for (const Node& n : t.nodes) used = used || (!n.is_terminal() && n.split_feature == feat);
      }
      EXPECT_GE(imp[feat], 0.0);
      if (!used) EXPECT_EQ(imp[feat], 0.0);
    }
  }
}

TEST(GiniImportance, BcwTopFeatures) {
  const Dataset ds = support::load_bcw();
  const auto part = split(ds, {2.0 / 3.0, 7});
  const Forest f = fit(ds, part.train, {500, 0, 1, 7});
  const auto imp = gini_importance(f);
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  std::vector<std::string> top;
  for (std::size_t i = 0; i < 5; ++i) top.push_back(ds.feature_names[order[i]]);
  for (const char* name : {"F23", "F4", "F28"}) {
    EXPECT_NE(std::find(top.begin(), top.end(), name), top.end()) << name << " not in top 5";
  }
}

TEST(PermutationImportance, UnusedFeatureIsExactlyZero) {
  Dataset ds;
  Forest f = one_split_forest(ds);
  f.trees[0].bag_counts = {1, 0, 2, 1};
  const auto p = permutation_importance(f, ds, f.train_rows, 1);
  EXPECT_EQ(p.importance[0], 0.0);
  EXPECT_EQ(p.skipped_trees, 0u);

  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset r = support::random_dataset(rng, 50, 6, 2);
    const Forest g = fit(r, support::all_rows(r), {6, 1, 1, rng.next()});
    const auto pi = permutation_importance(g, r, support::all_rows(r), rng.next());
    for (std::size_t feat = 0; feat < r.n_features(); ++feat) {
      bool used = false;
      for (const Tree& t : g.trees) {
        for (const Node& n : t.nodes) used = used || (!n.is_terminal() && n.split_feature == feat);
      }
      if (!used) EXPECT_EQ(pi.importance[feat], 0.0);
    }
  }
}

TEST(PermutationImportance, SkipsTreesWithoutOobRows) {
  Dataset ds;
  const Forest f = one_split_forest(ds);  // bag covers every training row
  EXPECT_THROW(permutation_importance(f, ds, f.train_rows, 1), DataError);
}

TEST(PermutationImportance, NoiseNearZeroAndPlantedFeatureWins) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Dataset ds = support::blobs(rng, 60, 2, 4, 1, 6.0);
    const auto rows = support::all_rows(ds);
    const Forest f = fit(ds, rows, {60, 0, 1, seed});
    const auto p = permutation_importance(f, ds, rows, seed);
    for (std::size_t feat = 1; feat < 4; ++feat) {
      EXPECT_LE(std::abs(p.importance[feat]), 0.02) << "seed " << seed;
      EXPECT_GT(p.importance[0], p.importance[feat]) << "seed " << seed;
    }
  }
}

TEST(Summarize, OrderedQuantiles) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.below(30));
    for (double& x : v) x = rng.uniform();
    const auto q = summarize(v);
    EXPECT_LE(q.min, q.q25);
    EXPECT_LE(q.q25, q.median);
    EXPECT_LE(q.median, q.q75);
    EXPECT_LE(q.q75, q.max);
  }
}

TEST(Robustness, SmokeOnToyData) {
  const Dataset ds = fixture_iris_toy();
  RobustnessConfig cfg;
  cfg.models = 2;
  cfg.forest.n_trees = 5;
  cfg.holdout = 2;
  const auto s = robustness_run(ds, cfg);
  ASSERT_EQ(s.runs.size(), 2u);
  for (const auto& row : s.rows) {
    EXPECT_LE(row.q.min, row.q.q25);
    EXPECT_LE(row.q.q25, row.q.median);
    EXPECT_LE(row.q.median, row.q.q75);
    EXPECT_LE(row.q.q75, row.q.max);
  }
  for (const auto& run : s.runs) {
    EXPECT_EQ(std::count(run.train_rows.begin(), run.train_rows.end(), 2u), 0);
    EXPECT_EQ(std::count(run.test_rows.begin(), run.test_rows.end(), 2u), 0);
    EXPECT_EQ(run.train_rows.size() + run.test_rows.size(), 9u);
    EXPECT_TRUE(run.holdout_contributions);
  }
  EXPECT_TRUE(std::any_of(s.rows.begin(), s.rows.end(), [](const auto& r) { return r.partition == "holdout"; }));
}

TEST(Robustness, DeterministicAndAccuracyRecomputes) {
  const Dataset ds = support::load_iris();
  RobustnessConfig cfg;
  cfg.models = 4;
  cfg.forest.n_trees = 25;
  const auto a = robustness_run(ds, cfg);
  const auto b = robustness_run(ds, cfg);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].q.median, b.rows[i].q.median);
    EXPECT_EQ(a.rows[i].q.min, b.rows[i].q.min);
  }
  EXPECT_EQ(a.accuracies(), b.accuracies());
  for (const auto& run : a.runs) {
    // Confusion matrix from the stored predictions.
    std::vector<std::size_t> confusion(9, 0);
    for (std::size_t i = 0; i < run.test_rows.size(); ++i) {
      ++confusion[ds.labels[run.test_rows[i]] * 3 + run.test_predictions[i]];
    }
    const double acc = static_cast<double>(confusion[0] + confusion[4] + confusion[8]) / run.test_rows.size();
    EXPECT_DOUBLE_EQ(run.accuracy, acc);
    const Forest f = fit(ds, run.train_rows, {25, 0, 1, run.seed});
    for (std::size_t i = 0; i < run.test_rows.size(); ++i) {
      EXPECT_EQ(predict(f, ds.row(run.test_rows[i]), mix_seed(run.seed, run.test_rows[i])).label,
                run.test_predictions[i]);
    }
  }
}

TEST(Robustness, RejectsBadConfig) {
  const Dataset ds = fixture_iris_toy();
  RobustnessConfig cfg;
  cfg.models = 1;
  EXPECT_THROW(robustness_run(ds, cfg), std::invalid_argument);
  cfg.models = 2;
  cfg.holdout = 10;
  EXPECT_THROW(robustness_run(ds, cfg), std::out_of_range);
}

TEST(Robustness, IndexHelperSanity) {
  const Dataset ds = support::load_bcw();
  EXPECT_EQ(ds.n_features(), 17u);
  EXPECT_LT(index_of(ds, "F28"), ds.n_features());
}
