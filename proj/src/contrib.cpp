#include "rfc/contrib.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rfc/errors.hpp"
#include "rfc/parallel.hpp"
#include "rfc/rng.hpp"

namespace rfc {

ContributionVector ContributionMatrix::project(std::size_t k) const {
  ContributionVector v;
  v.target_class = k;
  v.values.resize(features_);
  for (std::size_t f = 0; f < features_; ++f) v.values[f] = (*this)(f, k);
  return v;
}

double ContributionMatrix::column_sum(std::size_t k) const {
  double s = 0.0;
  for (std::size_t f = 0; f < features_; ++f) s += (*this)(f, k);
  return s;
}

namespace {

void check_instance(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw std::invalid_argument("instance has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(forest.n_features()));
  }
  if (!forest.has_statistics) {
    throw ModelError("model lacks node statistics; run annotate_node_distributions first");
  }
}

// Algorithm 2 for one tree: depth-first over the nodes, carrying the multiset
// of bag rows that reaches each node.
void annotate_tree(Tree& tree, const Dataset& ds, std::size_t tree_index, bool compare) {
  const std::size_t K = ds.n_classes();
  if (tree.bag_counts.size() != ds.n_instances()) {
    throw ModelError("tree " + std::to_string(tree_index) + ": bag_counts length " +
                     std::to_string(tree.bag_counts.size()) + " does not match dataset size " +
                     std::to_string(ds.n_instances()));
  }
  std::vector<std::size_t> root_rows;
  for (std::size_t r = 0; r < tree.bag_counts.size(); ++r) root_rows.insert(root_rows.end(), tree.bag_counts[r], r);

  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> stack;
  stack.emplace_back(0, std::move(root_rows));
  while (!stack.empty()) {
    auto [id, rows] = std::move(stack.back());
    stack.pop_back();
    Node& node = tree.nodes[id];
    const std::string at = "tree " + std::to_string(tree_index) + " node " + std::to_string(id);
    if (rows.empty()) throw ModelError(at + ": no training instances reach this node");

    std::vector<double> counts(K, 0.0);
    for (std::size_t r : rows) counts[ds.labels[r]] += 1.0;
    const auto y_mean = ClassDistribution::from_counts(counts);
    if (compare) {
      if (node.n_train != rows.size()) {
        throw ModelError(at + ": stored n_train " + std::to_string(node.n_train) + " but " +
                         std::to_string(rows.size()) + " training instances reach it");
      }
      if (node.y_mean.size() != K) throw ModelError(at + ": stored y_mean has wrong length");
      for (std::size_t k = 0; k < K; ++k) {
        if (std::abs(node.y_mean[k] - y_mean[k]) > 1e-12) {
          throw ModelError(at + ": stored y_mean differs from the recomputed class frequencies");
        }
      }
    }
    node.y_mean = y_mean;
    node.n_train = rows.size();

    if (node.is_terminal()) continue;
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (ds.instances(r, node.split_feature) <= node.split_value ? left : right).push_back(r);
    stack.emplace_back(static_cast<std::size_t>(node.right), std::move(right));
    stack.emplace_back(static_cast<std::size_t>(node.left), std::move(left));
  }
}

}  // namespace

Forest annotate_node_distributions(Forest forest, const Dataset& ds) {
  if (ds.labels.size() != ds.n_instances()) throw DataError("annotation requires labeled data");
  if (ds.n_classes() != forest.n_classes()) throw DataError("dataset and model disagree on the number of classes");
  if (ds.n_features() != forest.n_features()) throw DataError("dataset and model disagree on the number of features");
  const bool compare = forest.has_statistics;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) annotate_tree(forest.trees[t], ds, t, compare);
  const auto avg = root_average(forest.trees, forest.n_classes());
  if (compare) {
    for (std::size_t k = 0; k < avg.size(); ++k) {
      if (std::abs(avg[k] - forest.y_root_avg[k]) > 1e-12) throw ModelError("stored y_root_avg differs from recomputed value");
    }
  }
  forest.y_root_avg = avg;
  forest.has_statistics = true;
  return forest;
}

ContributionVector feature_contributions(const Forest& forest, std::span<const double> x, std::size_t k) {
  check_instance(forest, x);
  if (k >= forest.n_classes()) throw std::invalid_argument("class index out of range");
  ContributionVector fc;
  fc.target_class = k;
  fc.values.assign(forest.n_features(), 0.0);
  for (const Tree& tree : forest.trees) {
    std::size_t parent = 0;
    while (!tree.nodes[parent].is_terminal()) {
      const Node& p = tree.nodes[parent];
      const std::size_t f = p.split_feature;
      const auto child = static_cast<std::size_t>(x[f] <= p.split_value ? p.left : p.right);
      fc.values[f] += tree.nodes[child].y_mean[k] - p.y_mean[k];
      parent = child;
    }
  }
  const double n_trees = static_cast<double>(forest.n_trees());
  for (double& v : fc.values) v /= n_trees;
  return fc;
}

ContributionMatrix tree_contributions(const Tree& tree, std::span<const double> x, std::size_t n_features,
                                      std::size_t n_classes) {
  ContributionMatrix fc(n_features, n_classes);
  std::size_t parent = 0;
  while (!tree.nodes[parent].is_terminal()) {
    const Node& p = tree.nodes[parent];
    const std::size_t f = p.split_feature;
    const auto child = static_cast<std::size_t>(x[f] <= p.split_value ? p.left : p.right);
    const Node& c = tree.nodes[child];
    for (std::size_t k = 0; k < n_classes; ++k) fc(f, k) += c.y_mean[k] - p.y_mean[k];
    parent = child;
  }
  return fc;
}

ContributionMatrix feature_contributions_full(const Forest& forest, std::span<const double> x) {
  check_instance(forest, x);
  const std::size_t F = forest.n_features();
  const std::size_t K = forest.n_classes();
  // Accumulated in the same order as feature_contributions so each column is
  // bit-identical to the projected computation.
  ContributionMatrix fc(F, K);
  for (const Tree& tree : forest.trees) {
    std::size_t parent = 0;
    while (!tree.nodes[parent].is_terminal()) {
      const Node& p = tree.nodes[parent];
      const std::size_t f = p.split_feature;
      const auto child = static_cast<std::size_t>(x[f] <= p.split_value ? p.left : p.right);
      const Node& c = tree.nodes[child];
      for (std::size_t k = 0; k < K; ++k) fc(f, k) += c.y_mean[k] - p.y_mean[k];
      parent = child;
    }
  }
  const double n_trees = static_cast<double>(forest.n_trees());
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t k = 0; k < K; ++k) fc(f, k) /= n_trees;
  }
  return fc;
}

Explanation explain_instance(const Forest& forest, std::span<const double> x, std::size_t row,
                             const ExplainOptions& options) {
  Explanation e;
  e.row = row;
  const auto votes = predict_proba(forest, x);
  e.prediction = resolve_vote(votes, mix_seed(options.tie_seed, row));
  if (options.mode == TargetMode::fixed_class) {
    if (options.fixed_class >= forest.n_classes()) throw std::invalid_argument("class index out of range");
    e.target_class = options.fixed_class;
  } else {
    e.target_class = e.prediction.label;
  }
  e.target_probability = votes[e.target_class];
  e.contributions = feature_contributions_full(forest, x);
  return e;
}

std::vector<Explanation> contributions_matrix(const Forest& forest, const Dataset& ds,
                                              std::span<const std::size_t> rows,
                                              const ExplainOptions& options) {
  for (std::size_t r : rows) {
    if (r >= ds.n_instances()) throw std::invalid_argument("row index " + std::to_string(r) + " out of range");
  }
  if (ds.n_features() != forest.n_features()) throw DataError("dataset and model disagree on the number of features");
  std::vector<Explanation> out(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(parallel::threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = explain_instance(forest, ds.row(r), r, options);
  }
  return out;
}

bool check_unanimity(const Forest& forest) {
  for (const Tree& tree : forest.trees) {
    for (const Node& node : tree.nodes) {
      if (!node.is_terminal()) continue;
      std::size_t ones = 0;
      for (double p : node.y_mean.values()) {
        if (p == 1.0) {
          ++ones;
        } else if (p != 0.0) {
          return false;
        }
      }
      if (ones != 1) return false;
    }
  }
  return true;
}

double verify_decomposition(const Forest& forest, std::span<const double> x) {
  const auto votes = predict_proba(forest, x);
  const auto fc = feature_contributions_full(forest, x);
  double residual = 0.0;
  for (std::size_t k = 0; k < forest.n_classes(); ++k) {
    residual = std::max(residual, std::abs(votes[k] - (forest.y_root_avg[k] + fc.column_sum(k))));
  }
  return residual;
}

}  // namespace rfc
