#include "rfc/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "rfc/errors.hpp"
#include "rfc/parallel.hpp"
#include "rfc/patterns.hpp"
#include "rfc/rng.hpp"

namespace rfc {

std::vector<double> gini_importance(const Forest& forest) {
  if (!forest.has_statistics) throw ModelError("gini importance needs node statistics");
  std::vector<double> importance(forest.n_features(), 0.0);
  for (const Tree& tree : forest.trees) {
    for (const Node& node : tree.nodes) {
      if (node.is_terminal()) continue;
      const Node& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const Node& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double n = static_cast<double>(node.n_train);
      const double gain = gini_impurity(node.y_mean) - static_cast<double>(l.n_train) / n * gini_impurity(l.y_mean) -
                          static_cast<double>(r.n_train) / n * gini_impurity(r.y_mean);
      importance[node.split_feature] += n * std::max(0.0, gain);
    }
  }
  for (double& v : importance) v /= static_cast<double>(forest.n_trees());
  return importance;
}

namespace {

bool splits_on(const Tree& tree, std::size_t feature) {
  return std::any_of(tree.nodes.begin(), tree.nodes.end(),
                     [&](const Node& n) { return !n.is_terminal() && n.split_feature == feature; });
}

// Per-feature accuracy drop for one tree; empty if the tree has no OOB rows.
std::vector<double> tree_permutation_drop(const Tree& tree, std::size_t t, const Dataset& ds,
                                          std::span<const std::size_t> train, std::uint64_t seed,
                                          std::size_t repeats) {
  const auto oob = tree.oob_rows(train);
  if (oob.empty()) return {};
  const std::size_t F = ds.n_features();
  std::size_t baseline = 0;
  for (std::size_t i : oob) baseline += tree.predict(ds.row(i)) == ds.labels[i];

  std::vector<double> drop(F, 0.0);
  std::vector<double> x(F);
  std::vector<double> column(oob.size());
  for (std::size_t f = 0; f < F; ++f) {
    if (!splits_on(tree, f)) continue;
    std::size_t permuted_correct = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t j = 0; j < oob.size(); ++j) column[j] = ds.instances(oob[j], f);
      Rng rng(mix_seed(mix_seed(mix_seed(seed, t), f), r));
      rng.shuffle(std::span<double>(column));
      for (std::size_t j = 0; j < oob.size(); ++j) {
        const auto row = ds.row(oob[j]);
        std::copy(row.begin(), row.end(), x.begin());
        x[f] = column[j];
        permuted_correct += tree.predict(x) == ds.labels[oob[j]];
      }
    }
    const double n = static_cast<double>(oob.size());
    drop[f] = static_cast<double>(baseline) / n -
              static_cast<double>(permuted_correct) / (n * static_cast<double>(repeats));
  }
  return drop;
}

}  // namespace

PermutationImportance permutation_importance(const Forest& forest, const Dataset& ds,
                                             std::span<const std::size_t> train, std::uint64_t seed,
                                             std::size_t repeats) {
  if (repeats == 0) throw std::invalid_argument("permutation importance needs at least one repeat");
  if (!ds.labeled() || ds.n_features() != forest.n_features()) {
    throw DataError("dataset does not match the model");
  }
  const std::size_t T = forest.n_trees();
  std::vector<std::vector<double>> per_tree(T);
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::threads())
  for (std::size_t t = 0; t < T; ++t) {
    per_tree[t] = tree_permutation_drop(forest.trees[t], t, ds, train, seed, repeats);
  }
  PermutationImportance out;
  out.importance.assign(ds.n_features(), 0.0);
  std::size_t used = 0;
  for (const auto& drop : per_tree) {
    if (drop.empty()) {
      ++out.skipped_trees;
      continue;
    }
    ++used;
    for (std::size_t f = 0; f < drop.size(); ++f) out.importance[f] += drop[f];
  }
  if (used == 0) throw DataError("no tree has out-of-bag rows");
  for (double& v : out.importance) v /= static_cast<double>(used);
  return out;
}

Quantiles summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Quantiles q;
  q.min = *std::min_element(values.begin(), values.end());
  q.max = *std::max_element(values.begin(), values.end());
  q.q25 = quantile(values, 0.25);
  q.median = quantile(values, 0.5);
  q.q75 = quantile(values, 0.75);
  return q;
}

std::vector<double> RobustnessSummary::accuracies() const {
  std::vector<double> out;
  for (const auto& run : runs) out.push_back(run.accuracy);
  return out;
}

double RobustnessSummary::mean_accuracy() const {
  if (runs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& run : runs) sum += run.accuracy;
  return sum / static_cast<double>(runs.size());
}

namespace {

std::vector<std::optional<std::vector<double>>> medians_toward_own_class(const Forest& forest, const Dataset& ds,
                                                                         std::span<const std::size_t> rows,
                                                                         std::uint64_t tie_seed,
                                                                         std::vector<std::size_t>* predictions) {
  ExplainOptions options;
  options.tie_seed = tie_seed;
  const auto explanations = contributions_matrix(forest, ds, rows, options);
  std::vector<ContributionVector> contribs;
  std::vector<std::size_t> labels, predicted;
  std::vector<std::size_t> correct_only;
  for (const auto& e : explanations) {
    contribs.push_back(e.toward_target());
    labels.push_back(ds.labels[e.row]);
    predicted.push_back(e.prediction.label);
    correct_only.push_back(e.prediction.tie ? ds.n_classes() : e.prediction.label);
  }
  std::vector<std::optional<std::vector<double>>> out;
  for (auto& m : class_medians(contribs, labels, correct_only, ds.n_classes())) {
    out.push_back(m ? std::optional(std::move(m->median)) : std::nullopt);
  }
  if (predictions) *predictions = std::move(predicted);
  return out;
}

ModelRun run_model(const Dataset& ds, std::span<const std::size_t> pool, const RobustnessConfig& config,
                   std::size_t m) {
  ModelRun run;
  run.seed = mix_seed(config.base_seed, m);
  const auto part = split_indices(pool, {config.train_fraction, run.seed});
  run.train_rows = part.train;
  run.test_rows = part.test;
  ForestParams params = config.forest;
  params.seed = run.seed;
  const Forest forest = fit(ds, run.train_rows, params);

  run.train_medians = medians_toward_own_class(forest, ds, run.train_rows, run.seed, nullptr);
  run.test_medians = medians_toward_own_class(forest, ds, run.test_rows, run.seed, &run.test_predictions);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < run.test_rows.size(); ++i) correct += run.test_predictions[i] == ds.labels[run.test_rows[i]];
  run.accuracy = static_cast<double>(correct) / static_cast<double>(run.test_rows.size());
  if (config.holdout) run.holdout_contributions = feature_contributions_full(forest, ds.row(*config.holdout));
  return run;
}

}  // namespace

RobustnessSummary robustness_run(const Dataset& ds, const RobustnessConfig& config) {
  if (config.models < 2) throw std::invalid_argument("robustness needs at least 2 models");
  if (!ds.labeled()) throw DataError("robustness needs labeled data");
  if (config.holdout && *config.holdout >= ds.n_instances()) {
    throw std::out_of_range("holdout instance " + std::to_string(*config.holdout + 1) + " is out of range (1.." +
                            std::to_string(ds.n_instances()) + ")");
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.n_instances(); ++i) {
    if (!config.holdout || i != *config.holdout) pool.push_back(i);
  }

  RobustnessSummary summary;
  summary.runs.resize(config.models);
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::threads())
  for (std::size_t m = 0; m < config.models; ++m) summary.runs[m] = run_model(ds, pool, config, m);

  const std::size_t F = ds.n_features();
  const std::size_t K = ds.n_classes();
  auto add_rows = [&](const char* partition, auto&& value_of) {
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t f = 0; f < F; ++f) {
        std::vector<double> values;
        for (const auto& run : summary.runs) {
          if (auto v = value_of(run, f, c)) values.push_back(*v);
        }
        if (values.empty()) continue;
        summary.rows.push_back({f, c, partition, summarize(values), values.size()});
      }
    }
  };
  add_rows("train", [](const ModelRun& r, std::size_t f, std::size_t c) -> std::optional<double> {
    if (!r.train_medians[c]) return std::nullopt;
    return (*r.train_medians[c])[f];
  });
  add_rows("test", [](const ModelRun& r, std::size_t f, std::size_t c) -> std::optional<double> {
    if (!r.test_medians[c]) return std::nullopt;
    return (*r.test_medians[c])[f];
  });
  if (config.holdout) {
    add_rows("holdout", [](const ModelRun& r, std::size_t f, std::size_t c) -> std::optional<double> {
      return (*r.holdout_contributions)(f, c);
    });
  }
  return summary;
}

}  // namespace rfc
