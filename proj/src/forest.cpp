#include "rfc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rfc/errors.hpp"
#include "rfc/parallel.hpp"
#include "rfc/rng.hpp"
#include "tree_builder.hpp"

namespace rfc {

ClassDistribution ClassDistribution::unit(std::size_t k, std::size_t n_classes) {
  std::vector<double> p(n_classes, 0.0);
  p.at(k) = 1.0;
  return ClassDistribution(std::move(p));
}

ClassDistribution ClassDistribution::from_counts(std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("class counts must have a positive total");
  std::vector<double> p(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) p[k] = counts[k] / total;
  return ClassDistribution(std::move(p));
}

bool ClassDistribution::is_valid(double tol) const {
  if (probs_.empty()) return false;
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::vector<std::size_t> ClassDistribution::argmax_set() const {
  std::vector<std::size_t> best;
  double top = -1.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    if (probs_[k] > top) {
      top = probs_[k];
      best.assign(1, k);
    } else if (probs_[k] == top) {
      best.push_back(k);
    }
  }
  return best;
}

std::size_t ClassDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double gini_impurity(const ClassDistribution& d) {
  double sq = 0.0;
  for (double p : d.values()) sq += p * p;
  return 1.0 - sq;
}

namespace {

constexpr double kMinGain = 1e-12;

double gini_from_counts(std::span<const double> counts, double n) {
  double sq = 0.0;
  for (double c : counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

}  // namespace

std::optional<SplitCandidate> best_split(std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const Dataset& ds) {
  if (rows.empty()) throw std::invalid_argument("best_split needs at least one row");
  const std::size_t n_classes = ds.n_classes();
  const auto parent_counts = detail::class_counts(ds, rows);
  const double n = static_cast<double>(rows.size());
  const double parent_gini = gini_from_counts(parent_counts, n);
  if (parent_gini <= 0.0) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, std::size_t>> sorted(rows.size());
  std::vector<double> left(n_classes), right(n_classes);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {ds.instances(rows[i], f), ds.labels[rows[i]]};
    std::sort(sorted.begin(), sorted.end());
    std::fill(left.begin(), left.end(), 0.0);
    right = parent_counts;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      left[sorted[i].second] += 1.0;
      right[sorted[i].second] -= 1.0;
      const double a = sorted[i].first;
      const double b = sorted[i + 1].first;
      if (a == b) continue;
      const double n_left = static_cast<double>(i + 1);
      const double n_right = n - n_left;
      const double gain = parent_gini - n_left / n * gini_from_counts(left, n_left) -
                          n_right / n * gini_from_counts(right, n_right);
      if (gain > kMinGain && (!best || gain > best->gain + kMinGain)) {
        double threshold = (a + b) / 2.0;
        if (!(threshold < b)) threshold = a;
        best = SplitCandidate{f, threshold, gain};
      }
    }
  }
  return best;
}

std::size_t Tree::terminal_for(std::span<const double> x) const {
  std::size_t id = 0;
  while (!nodes[id].is_terminal()) {
    const Node& node = nodes[id];
    id = static_cast<std::size_t>(x[node.split_feature] <= node.split_value ? node.left : node.right);
  }
  return id;
}

std::size_t Tree::bag_size() const {
  return std::accumulate(bag_counts.begin(), bag_counts.end(), std::size_t{0});
}

std::vector<std::size_t> Tree::oob_rows(std::span<const std::size_t> train) const {
  std::vector<std::size_t> out;
  for (std::size_t r : train) {
    if (r < bag_counts.size() && bag_counts[r] == 0) out.push_back(r);
  }
  return out;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    deepest = std::max(deepest, level[id]);
    if (!nodes[id].is_terminal()) {
      level[static_cast<std::size_t>(nodes[id].left)] = level[id] + 1;
      level[static_cast<std::size_t>(nodes[id].right)] = level[id] + 1;
    }
  }
  return deepest;
}

ForestParams resolve_params(const ForestParams& params, std::size_t n_features) {
  if (n_features == 0) throw std::invalid_argument("dataset has no features");
  if (params.n_trees < 1) throw std::invalid_argument("number of trees must be >= 1");
  ForestParams out = params;
  if (out.mtry == 0) out.mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(n_features))));
  if (out.mtry > n_features) throw std::invalid_argument("mtry must not exceed the number of features");
  if (out.min_node_size < 1) throw std::invalid_argument("min_node_size must be >= 1");
  return out;
}

Forest fit(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params) {
  const ForestParams resolved = resolve_params(params, ds.n_features());
  detail::check_fit_inputs(ds, train);
  std::vector<Tree> trees(resolved.n_trees);
  const auto n_trees = static_cast<std::ptrdiff_t>(trees.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::threads())
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    trees[static_cast<std::size_t>(t)] = detail::grow_tree(ds, train, static_cast<std::size_t>(t), resolved);
  }
  return detail::assemble_forest(ds, train, resolved, std::move(trees));
}

ClassDistribution predict_proba(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw std::invalid_argument("instance has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(forest.n_features()));
  }
  std::vector<double> votes(forest.n_classes(), 0.0);
  for (const Tree& tree : forest.trees) votes[tree.predict(x)] += 1.0;
  const double n_trees = static_cast<double>(forest.n_trees());
  for (double& v : votes) v /= n_trees;
  return ClassDistribution(std::move(votes));
}

Prediction resolve_vote(const ClassDistribution& votes, std::uint64_t tie_seed) {
  const auto best = votes.argmax_set();
  Prediction p;
  p.tie = best.size() > 1;
  p.label = p.tie ? best[Rng(tie_seed).below(best.size())] : best.front();
  p.vote_fraction = votes[p.label];
  return p;
}

Prediction predict(const Forest& forest, std::span<const double> x, std::uint64_t tie_seed) {
  return resolve_vote(predict_proba(forest, x), tie_seed);
}

std::vector<ClassDistribution> predict_proba_batch(const Forest& forest, const Dataset& ds,
                                                   std::span<const std::size_t> rows) {
  std::vector<ClassDistribution> out(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static) num_threads(parallel::threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = predict_proba(forest, ds.row(rows[static_cast<std::size_t>(i)]));
  }
  return out;
}

ClassDistribution root_average(std::span<const Tree> trees, std::size_t n_classes) {
  std::vector<double> avg(n_classes, 0.0);
  for (const Tree& tree : trees) {
    for (std::size_t k = 0; k < n_classes; ++k) avg[k] += tree.root().y_mean[k];
  }
  for (double& v : avg) v /= static_cast<double>(trees.size());
  return ClassDistribution(std::move(avg));
}

void validate(const Forest& forest) {
  const std::size_t K = forest.n_classes();
  const std::size_t F = forest.n_features();
  if (K < 2) throw ModelError("model needs at least 2 classes");
  if (F == 0) throw ModelError("model has no features");
  if (forest.trees.empty()) throw ModelError("model has no trees");
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    const std::string where = "tree " + std::to_string(t);
    if (tree.nodes.empty()) throw ModelError(where + ": no nodes");
    std::vector<int> parents(tree.nodes.size(), 0);
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      const Node& node = tree.nodes[id];
      const std::string at = where + " node " + std::to_string(id);
      if (forest.has_statistics) {
        if (node.y_mean.size() != K) throw ModelError(at + ": y_mean has wrong length");
        if (!node.y_mean.is_valid(1e-12)) throw ModelError(at + ": y_mean is not a probability distribution");
      }
      if (node.is_terminal()) continue;
      if (node.split_feature >= F) throw ModelError(at + ": split feature out of range");
      if (!std::isfinite(node.split_value)) throw ModelError(at + ": split value is not finite");
      for (std::int32_t child : {node.left, node.right}) {
        if (child <= static_cast<std::int32_t>(id) || static_cast<std::size_t>(child) >= tree.nodes.size()) {
          throw ModelError(at + ": invalid child reference");
        }
        if (++parents[static_cast<std::size_t>(child)] > 1) throw ModelError(at + ": node has two parents");
      }
      if (node.left == node.right) throw ModelError(at + ": children must differ");
      if (!forest.has_statistics) continue;
      const Node& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const Node& r = tree.nodes[static_cast<std::size_t>(node.right)];
      if (l.n_train + r.n_train != node.n_train) throw ModelError(at + ": child counts do not add up");
      for (std::size_t k = 0; k < K; ++k) {
        const double avg = (l.y_mean[k] * static_cast<double>(l.n_train) +
                            r.y_mean[k] * static_cast<double>(r.n_train)) /
                           static_cast<double>(node.n_train);
        if (std::abs(avg - node.y_mean[k]) > 1e-12) throw ModelError(at + ": y_mean inconsistent with children");
      }
    }
    for (std::size_t id = 1; id < tree.nodes.size(); ++id) {
      if (parents[id] != 1) throw ModelError(where + ": node " + std::to_string(id) + " is unreachable");
    }
    if (forest.has_statistics && tree.bag_size() != tree.root().n_train && !tree.bag_counts.empty()) {
      throw ModelError(where + ": bag size does not match root count");
    }
  }
  if (forest.has_statistics) {
    if (!forest.y_root_avg.is_valid(1e-12)) throw ModelError("y_root_avg is not a probability distribution");
    const auto avg = root_average(forest.trees, K);
    for (std::size_t k = 0; k < K; ++k) {
      if (std::abs(avg[k] - forest.y_root_avg[k]) > 1e-12) throw ModelError("y_root_avg does not match roots");
    }
  }
}

std::size_t count_tied_leaves(const Forest& forest) {
  std::size_t n = 0;
  for (const Tree& tree : forest.trees) {
    for (const Node& node : tree.nodes) {
      if (node.is_terminal() && node.y_mean.argmax_set().size() > 1) ++n;
    }
  }
  return n;
}

}  // namespace rfc
