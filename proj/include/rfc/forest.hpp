#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfc/dataset.hpp"

namespace rfc {

/// A point of the probability simplex over the K classes.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  explicit ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  static ClassDistribution unit(std::size_t k, std::size_t n_classes);
  /// Normalizes non-negative counts; the total must be positive.
  static ClassDistribution from_counts(std::span<const double> counts);

  std::size_t size() const { return probs_.size(); }
  bool empty() const { return probs_.empty(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  std::span<const double> values() const { return probs_; }

  /// Entries >= 0 and summing to 1 within tol.
  bool is_valid(double tol = 1e-12) const;

  /// Classes attaining the maximum, ascending.
  std::vector<std::size_t> argmax_set() const;
  /// Lowest-index maximum.
  std::size_t argmax() const;

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  std::vector<double> probs_;
};

/// 1 - sum p_k^2.
double gini_impurity(const ClassDistribution& d);

enum class NodeKind { internal, terminal };

struct Node {
  NodeKind kind = NodeKind::terminal;
  std::size_t split_feature = 0;
  double split_value = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  /// Class frequencies among the local training instances (with bootstrap
  /// multiplicity) reaching this node.
  ClassDistribution y_mean;
  std::size_t n_train = 0;

  bool is_terminal() const { return kind == NodeKind::terminal; }
};

struct Tree {
  /// Nodes in breadth-first order; nodes[0] is the root.
  std::vector<Node> nodes;
  /// Bootstrap multiplicity of every dataset row (0 for rows not drawn).
  std::vector<std::uint32_t> bag_counts;

  const Node& root() const { return nodes.front(); }
  /// Index of the terminal node reached by x (x[f] <= threshold goes left).
  std::size_t terminal_for(std::span<const double> x) const;
  /// Majority class of a terminal node; draws resolve to the lower index.
  std::size_t leaf_class(std::size_t node) const { return nodes[node].y_mean.argmax(); }
  std::size_t predict(std::span<const double> x) const { return leaf_class(terminal_for(x)); }
  std::size_t bag_size() const;
  /// Training rows never drawn into the bag.
  std::vector<std::size_t> oob_rows(std::span<const std::size_t> train) const;
  std::size_t depth() const;
};

struct ForestParams {
  std::size_t n_trees = 500;
  /// 0 selects floor(sqrt(#features)).
  std::size_t mtry = 0;
  std::size_t min_node_size = 1;
  std::uint64_t seed = 7;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::string label_column;
  /// Dataset rows the forest was trained on, ascending.
  std::vector<std::size_t> train_rows;
  /// Mean of the root y_mean vectors.
  ClassDistribution y_root_avg;
  /// Resolved hyperparameters (mtry is never 0 here).
  ForestParams params;
  /// False when a loaded model lacked node statistics; annotate_node_distributions fills them.
  bool has_statistics = true;

  std::size_t n_trees() const { return trees.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  std::size_t n_features() const { return feature_names.size(); }
};

struct SplitCandidate {
  std::size_t feature;
  double threshold;
  /// Weighted Gini decrease: gini(parent) - sum_c n_c / n * gini(c).
  double gain;
};

/// Best CART split of the (multi)set of rows over the candidate features and
/// all midpoints between consecutive distinct values. Returns nullopt when the
/// node is pure or no split has positive gain. Ties go to the lowest feature
/// index, then the lowest threshold.
std::optional<SplitCandidate> best_split(std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const Dataset& ds);

/// Validates params against the dataset and resolves mtry. Throws std::invalid_argument.
ForestParams resolve_params(const ForestParams& params, std::size_t n_features);

/// Grows params.n_trees unpruned trees in parallel (one RNG stream per tree).
Forest fit(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params);

/// Fraction of trees voting for each class.
ClassDistribution predict_proba(const Forest& forest, std::span<const double> x);

struct Prediction {
  std::size_t label = 0;
  bool tie = false;
  double vote_fraction = 0.0;
};

/// Argmax of the vote distribution; a draw is resolved uniformly at random
/// from tie_seed and reported.
Prediction resolve_vote(const ClassDistribution& votes, std::uint64_t tie_seed);
Prediction predict(const Forest& forest, std::span<const double> x, std::uint64_t tie_seed);

/// Vote distributions for many rows (OpenMP over rows).
std::vector<ClassDistribution> predict_proba_batch(const Forest& forest, const Dataset& ds,
                                                   std::span<const std::size_t> rows);

/// Coordinate-wise mean of the root distributions, accumulated in tree order.
ClassDistribution root_average(std::span<const Tree> trees, std::size_t n_classes);

/// Structural and statistical invariants; throws ModelError.
void validate(const Forest& forest);

/// Number of terminal nodes whose majority class is a draw.
std::size_t count_tied_leaves(const Forest& forest);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);
/// Serialized form written by save(); identical forests give identical text.
std::string dump_model(const Forest& forest, const nlohmann::json& provenance = nullptr);
void save(const Forest& forest, const std::filesystem::path& path,
          const nlohmann::json& provenance = nullptr);
Forest load(const std::filesystem::path& path);

/// Hand-built two-tree forest over fixture_iris_toy() reproducing the worked
/// contribution example (root class-1 frequencies 3/7 and 4/7).
Forest fixture_iris_toy_forest();

}  // namespace rfc
