#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "rfc/contrib.hpp"
#include "rfc/dataset.hpp"
#include "rfc/forest.hpp"

namespace rfc {

/// Per feature: sum of n_train * (weighted Gini decrease) over the internal
/// nodes splitting on it, divided by the number of trees.
std::vector<double> gini_importance(const Forest& forest);

struct PermutationImportance {
  std::vector<double> importance;
  /// Trees without out-of-bag rows (left out of the average).
  std::size_t skipped_trees = 0;
};

/// Mean over trees of (OOB accuracy - OOB accuracy with feature f permuted
/// among that tree's OOB rows), each permuted accuracy averaged over `repeats`
/// seeded permutations.
PermutationImportance permutation_importance(const Forest& forest, const Dataset& ds,
                                             std::span<const std::size_t> train,
                                             std::uint64_t seed, std::size_t repeats = 5);

struct Quantiles {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};
Quantiles summarize(std::vector<double> values);

struct RobustnessConfig {
  std::size_t models = 100;
  ForestParams forest;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t base_seed = 7;
  /// Row excluded from every training set and explained by every model.
  std::optional<std::size_t> holdout;
};

struct ModelRun {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<std::size_t> test_predictions;
  double accuracy = 0.0;
  /// Class medians toward the own class over correctly classified instances.
  std::vector<std::optional<std::vector<double>>> train_medians;
  std::vector<std::optional<std::vector<double>>> test_medians;
  std::optional<ContributionMatrix> holdout_contributions;
};

struct RobustnessRow {
  std::size_t feature = 0;
  std::size_t class_index = 0;
  std::string partition;  // "train", "test" or "holdout"
  Quantiles q;
  std::size_t n_models = 0;
};

struct RobustnessSummary {
  std::vector<ModelRun> runs;
  std::vector<RobustnessRow> rows;

  std::vector<double> accuracies() const;
  double mean_accuracy() const;
};

/// Trains config.models independent forests (independent splits and seeds)
/// and collects the distribution of class-median contributions over models.
RobustnessSummary robustness_run(const Dataset& ds, const RobustnessConfig& config);

}  // namespace rfc
