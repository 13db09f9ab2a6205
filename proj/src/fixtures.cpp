#include <array>

#include "rfc/dataset.hpp"
#include "rfc/forest.hpp"

namespace rfc {

Dataset fixture_iris_toy() {
  static constexpr std::array<std::array<double, 4>, 10> kRows{{
      {6.4, 3.2, 4.5, 1.5},
      {6.3, 2.5, 4.9, 1.5},
      {6.4, 2.9, 4.3, 1.3},
      {5.5, 2.5, 4.0, 1.3},
      {5.5, 2.6, 4.4, 1.2},
      {7.7, 3.0, 6.1, 2.3},
      {6.4, 3.1, 5.5, 1.8},
      {6.0, 3.0, 4.8, 1.8},
      {6.7, 3.3, 5.7, 2.5},
      {6.5, 3.0, 5.2, 2.0},
  }};
  Dataset ds;
  ds.feature_names = {"Sepal.Length", "Sepal.Width", "Petal.Length", "Petal.Width"};
  ds.class_names = {"versicolor", "virginica"};
  for (std::size_t i = 0; i < kRows.size(); ++i) {
    ds.instances.append_row(kRows[i]);
    ds.labels.push_back(i < 5 ? 0 : 1);
  }
  return ds;
}

namespace {

Node internal(std::size_t feature, double threshold, std::int32_t left, double n0, double n1) {
  Node n;
  n.kind = NodeKind::internal;
  n.split_feature = feature;
  n.split_value = threshold;
  n.left = left;
  n.right = left + 1;
  const std::array<double, 2> counts{n0, n1};
  n.y_mean = ClassDistribution::from_counts(counts);
  n.n_train = static_cast<std::size_t>(n0 + n1);
  return n;
}

Node terminal(double n0, double n1) {
  Node n;
  const std::array<double, 2> counts{n0, n1};
  n.y_mean = ClassDistribution::from_counts(counts);
  n.n_train = static_cast<std::size_t>(n0 + n1);
  return n;
}

std::vector<std::uint32_t> bag(std::initializer_list<std::size_t> rows) {
  std::vector<std::uint32_t> counts(10, 0);
  for (std::size_t r : rows) ++counts[r];
  return counts;
}

}  // namespace

// Both trees are what greedy CART grows on the given bags when the candidate
// feature at each node is the one shown (tree 1 also with all four features).
// Thresholds are midpoints between neighbouring bag values.
Forest fixture_iris_toy_forest() {
  constexpr std::size_t kSepalWidth = 1;
  constexpr std::size_t kPetalLength = 2;

  // Bag {x1, x2, x3, x4, x6, x7, x9}: petal length separates the classes.
  Tree t1;
  t1.bag_counts = bag({0, 1, 2, 3, 5, 6, 8});
  t1.nodes = {
      internal(kPetalLength, (4.9 + 5.5) / 2, 1, 4, 3),
      terminal(4, 0),
      terminal(0, 3),
  };

  // Bag {x1, x2, x4, x6, x7, x8, x10}.
  Tree t2;
  t2.bag_counts = bag({0, 1, 3, 5, 6, 7, 9});
  t2.nodes = {
      internal(kPetalLength, (4.9 + 5.2) / 2, 1, 3, 4),  // n0
      internal(kSepalWidth, (2.5 + 3.0) / 2, 3, 3, 1),   // n1: {x1, x2, x4, x8}
      terminal(0, 3),                                    // n2: {x6, x7, x10}
      terminal(2, 0),                                    // n3: {x2, x4}
      internal(kPetalLength, (4.5 + 4.8) / 2, 5, 1, 1),  // n4: {x1, x8}
      terminal(1, 0),                                    // n5: {x1}
      terminal(0, 1),                                    // n6: {x8}
  };

  const Dataset ds = fixture_iris_toy();
  Forest forest;
  forest.trees = {std::move(t1), std::move(t2)};
  forest.class_names = ds.class_names;
  forest.feature_names = ds.feature_names;
  forest.label_column = "class";
  forest.train_rows = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  forest.params = ForestParams{2, 4, 1, 7};
  forest.y_root_avg = root_average(forest.trees, 2);
  return forest;
}

}  // namespace rfc
