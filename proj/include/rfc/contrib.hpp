#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfc/dataset.hpp"
#include "rfc/forest.hpp"

namespace rfc {

/// Per-feature contributions toward one class (units of probability mass).
struct ContributionVector {
  std::vector<double> values;
  std::size_t target_class = 0;
};

/// Per-feature, per-class contributions (row = feature, column = class).
class ContributionMatrix {
 public:
  ContributionMatrix() = default;
  ContributionMatrix(std::size_t n_features, std::size_t n_classes)
      : features_(n_features), classes_(n_classes), values_(n_features * n_classes, 0.0) {}

  std::size_t n_features() const { return features_; }
  std::size_t n_classes() const { return classes_; }
  double& operator()(std::size_t f, std::size_t k) { return values_[f * classes_ + k]; }
  double operator()(std::size_t f, std::size_t k) const { return values_[f * classes_ + k]; }
  ContributionVector project(std::size_t k) const;
  /// Sum over features of column k.
  double column_sum(std::size_t k) const;

  friend bool operator==(const ContributionMatrix&, const ContributionMatrix&) = default;

 private:
  std::size_t features_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> values_;
};

/// Recomputes every node's y_mean and n_train by routing each tree's bag
/// depth-first. Missing statistics are filled in; present ones must agree
/// within 1e-12, otherwise ModelError is thrown.
Forest annotate_node_distributions(Forest forest, const Dataset& ds);

/// Contributions toward class k: along each tree path, the change of the
/// k-th coordinate of y_mean from parent to child is credited to the
/// parent's split feature; the sum over trees is divided by T.
ContributionVector feature_contributions(const Forest& forest, std::span<const double> x, std::size_t k);

/// All K classes at once; column k equals feature_contributions(forest, x, k).
ContributionMatrix feature_contributions_full(const Forest& forest, std::span<const double> x);

/// Single-tree contributions (no division by T).
ContributionMatrix tree_contributions(const Tree& tree, std::span<const double> x,
                                      std::size_t n_features, std::size_t n_classes);

enum class TargetMode { predicted_class, fixed_class };

struct ExplainOptions {
  TargetMode mode = TargetMode::predicted_class;
  std::size_t fixed_class = 0;
  /// Ties in the vote are broken with mix_seed(tie_seed, row).
  std::uint64_t tie_seed = 7;
};

struct Explanation {
  std::size_t row = 0;
  Prediction prediction;
  /// Class the contributions point toward and its vote share.
  std::size_t target_class = 0;
  double target_probability = 0.0;
  ContributionMatrix contributions;

  ContributionVector toward_target() const { return contributions.project(target_class); }
};

Explanation explain_instance(const Forest& forest, std::span<const double> x, std::size_t row,
                             const ExplainOptions& options);

/// One explanation per requested row (duplicates allowed), OpenMP over rows.
std::vector<Explanation> contributions_matrix(const Forest& forest, const Dataset& ds,
                                              std::span<const std::size_t> rows,
                                              const ExplainOptions& options);

/// True iff every terminal node's y_mean is a unit vector.
bool check_unanimity(const Forest& forest);

/// max_k |votes_k - (root_avg_k + sum_f FC_k^f)|; below 1e-10 whenever
/// check_unanimity holds, otherwise only reported.
double verify_decomposition(const Forest& forest, std::span<const double> x);

}  // namespace rfc
