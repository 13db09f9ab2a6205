#include "tree_builder.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "rfc/errors.hpp"
#include "rfc/rng.hpp"

namespace rfc::detail {

std::vector<double> class_counts(const Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<double> counts(ds.n_classes(), 0.0);
  for (std::size_t r : rows) counts[ds.labels[r]] += 1.0;
  return counts;
}

void check_fit_inputs(const Dataset& ds, std::span<const std::size_t> train) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (ds.labels.size() != ds.n_instances()) throw DataError("training data must be labeled");
  for (std::size_t r : train) {
    if (r >= ds.n_instances()) throw std::invalid_argument("training index out of range");
  }
}

namespace {

struct PendingNode {
  std::size_t id;
  std::vector<std::size_t> rows;
};

Node make_node(const Dataset& ds, std::span<const std::size_t> rows) {
  Node node;
  node.y_mean = ClassDistribution::from_counts(class_counts(ds, rows));
  node.n_train = rows.size();
  return node;
}

// The first mtry features of a random permutation are searched. If none of
// them admits a positive-gain split the remaining features are tried in
// permutation order, so impure nodes are only left unsplit when no feature
// separates them.
std::optional<SplitCandidate> choose_split(const Dataset& ds, std::span<const std::size_t> rows,
                                           std::size_t mtry, Rng& rng) {
  std::vector<std::size_t> features(ds.n_features());
  std::iota(features.begin(), features.end(), std::size_t{0});
  for (std::size_t i = 0; i < mtry; ++i) {
    std::swap(features[i], features[i + rng.below(features.size() - i)]);
  }
  auto best = best_split(rows, std::span(features).first(mtry), ds);
  for (std::size_t i = mtry; !best && i < features.size(); ++i) {
    best = best_split(rows, std::span(features).subspan(i, 1), ds);
  }
  return best;
}

}  // namespace

Tree grow_tree(const Dataset& ds, std::span<const std::size_t> train, std::size_t tree_index,
               const ForestParams& params) {
  Rng rng(mix_seed(params.seed, tree_index));
  Tree tree;
  tree.bag_counts.assign(ds.n_instances(), 0);
  for (std::size_t i = 0; i < train.size(); ++i) ++tree.bag_counts[train[rng.below(train.size())]];

  std::vector<std::size_t> bag;
  bag.reserve(train.size());
  for (std::size_t r = 0; r < tree.bag_counts.size(); ++r) bag.insert(bag.end(), tree.bag_counts[r], r);

  tree.nodes.push_back(make_node(ds, bag));
  std::deque<PendingNode> queue;
  queue.push_back({0, std::move(bag)});
  while (!queue.empty()) {
    PendingNode pending = std::move(queue.front());
    queue.pop_front();
    const std::size_t n = pending.rows.size();
    if (n < 2 || n < params.min_node_size) continue;
    if (gini_impurity(tree.nodes[pending.id].y_mean) == 0.0) continue;

    const auto split = choose_split(ds, pending.rows, params.mtry, rng);
    if (!split) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : pending.rows) {
      (ds.instances(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left_id = tree.nodes.size();
    tree.nodes.push_back(make_node(ds, left_rows));
    tree.nodes.push_back(make_node(ds, right_rows));

    Node& node = tree.nodes[pending.id];
    node.kind = NodeKind::internal;
    node.split_feature = split->feature;
    node.split_value = split->threshold;
    node.left = static_cast<std::int32_t>(left_id);
    node.right = static_cast<std::int32_t>(left_id + 1);

    queue.push_back({left_id, std::move(left_rows)});
    queue.push_back({left_id + 1, std::move(right_rows)});
  }
  return tree;
}

Forest assemble_forest(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params,
                       std::vector<Tree> trees) {
  Forest forest;
  forest.trees = std::move(trees);
  forest.class_names = ds.class_names;
  forest.feature_names = ds.feature_names;
  forest.train_rows.assign(train.begin(), train.end());
  std::sort(forest.train_rows.begin(), forest.train_rows.end());
  forest.train_rows.erase(std::unique(forest.train_rows.begin(), forest.train_rows.end()),
                          forest.train_rows.end());
  forest.params = params;
  forest.y_root_avg = root_average(forest.trees, ds.n_classes());
  return forest;
}

}  // namespace rfc::detail
