#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfc/contrib.hpp"
#include "rfc/forest.hpp"
#include "rfc/kmeans.hpp"
#include "rfc/matrix.hpp"

namespace rfc {

/// Median contribution vector ("standard level") of one class.
struct MedianPattern {
  std::size_t class_index = 0;
  std::vector<double> median;
  std::size_t support = 0;
};

/// Sample median, averaging the two middle values for even counts.
double median(std::vector<double> values);

/// Linear-interpolation quantile (the usual "type 7" definition), q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Per class, the coordinate-wise median of the contribution vectors of
/// instances whose prediction equals their label. Classes without such
/// instances yield nullopt. Callers pass an out-of-range prediction for tied
/// votes.
std::vector<std::optional<MedianPattern>> class_medians(std::span<const ContributionVector> contribs,
                                                        std::span<const std::size_t> labels,
                                                        std::span<const std::size_t> predictions,
                                                        std::size_t n_classes);

struct CoreRule {
  double min_size_fraction = 0.10;
  double min_vote_fraction = 0.9;
  double max_avg_distance = std::numeric_limits<double>::infinity();
  /// A core cluster's avg_distance is at most this multiple of the smallest
  /// avg_distance among clusters meeting the size and vote conditions.
  double max_relative_distance = 2.0;
};

/// Pure function of the cluster summaries and the rule.
std::vector<bool> select_core_clusters(std::span<const std::size_t> sizes,
                                       std::span<const double> avg_vote_fraction,
                                       std::span<const double> avg_distance, std::size_t support,
                                       const CoreRule& rule);

struct ClusterConfig {
  std::size_t k = 3;
  std::uint64_t seed = 7;
  CoreRule core;
  double variance_floor = 1e-9;
  /// Percentile of member distances used as the per-cluster distance threshold.
  double distance_percentile = 95.0;
  KMeansOptions kmeans;
};

struct ClusterModel {
  std::size_t class_index = 0;
  std::size_t k = 0;
  Matrix centers;
  /// Sample variances per cluster and feature, floored.
  Matrix variances;
  std::vector<std::size_t> sizes;
  std::vector<double> avg_distance;
  std::vector<double> avg_vote_fraction;
  std::vector<double> distance_threshold;
  std::vector<bool> core;
  /// Clusters with fewer than two members (variance set to the floor).
  std::vector<bool> low_support;

  std::size_t support() const;
  /// Nearest center by Euclidean distance (lowest index on ties).
  std::size_t nearest(std::span<const double> fc) const;
};

/// Clusters the contributions of correctly classified instances of class
/// `class_index` (vectors are expected to point toward that class).
ClusterModel build_cluster_model(std::span<const ContributionVector> contribs,
                                 std::span<const std::size_t> labels,
                                 std::span<const std::size_t> predictions,
                                 std::span<const double> vote_fractions, std::size_t class_index,
                                 const ClusterConfig& config);

/// Diagonal Gaussian log-likelihood:
/// sum_f -(fc_f - mu_f)^2 / (2 sigma_f^2) - log(2 pi sigma_f^2) / 2.
double log_likelihood(std::span<const double> fc, std::span<const double> center,
                      std::span<const double> variances);

enum class KRule { elbow, bic };

struct PatternConfig {
  /// 0 selects k automatically per k_rule.
  std::size_t k = 0;
  /// elbow: min(elbow_k, BIC k); bic: the BIC k.
  KRule k_rule = KRule::elbow;
  std::size_t k_max = 6;
  std::uint64_t seed = 7;
  CoreRule core;
  double variance_floor = 1e-9;
  double distance_percentile = 95.0;
  double vote_threshold = 0.8;
  KMeansOptions kmeans;
};

struct PatternModel {
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::vector<std::optional<MedianPattern>> medians;
  std::vector<std::optional<ClusterModel>> clusters;
  std::vector<std::optional<KSelection>> k_selection;
  PatternConfig config;
  /// Number of instances the patterns were built from.
  std::size_t n_instances = 0;
};

/// Explains the given rows (predicted-class mode), then builds medians,
/// k diagnostics and cluster models per class.
PatternModel build_pattern_model(const Forest& forest, const Dataset& ds,
                                 std::span<const std::size_t> rows, const PatternConfig& config);

enum class Verdict { trusted, doubtful };

struct CoreLikelihood {
  std::size_t class_index = 0;
  std::size_t cluster = 0;
  double value = 0.0;
};

struct ReliabilityReport {
  std::size_t predicted_class = 0;
  bool tie = false;
  double vote_fraction = 0.0;
  std::size_t assigned_cluster = 0;
  bool assigned_is_core = false;
  double distance_to_center = 0.0;
  double distance_threshold = 0.0;
  double vote_threshold = 0.0;
  /// Contributions toward class c scored against each core cluster of class c.
  std::vector<CoreLikelihood> log_likelihoods;
  Verdict verdict = Verdict::doubtful;
  std::vector<std::string> reasons;

  /// Highest core-cluster log-likelihood of a class (nullopt if it has no core cluster).
  std::optional<double> best_log_likelihood(std::size_t class_index) const;
};

/// Applies the trust rule to the recorded fields; returns reason codes for a
/// doubtful verdict.
std::pair<Verdict, std::vector<std::string>> derive_verdict(const ReliabilityReport& report);

/// Throws ModelError if the predicted class has no cluster model.
ReliabilityReport reliability_report(const Forest& forest, const PatternModel& model,
                                     std::span<const double> x, std::uint64_t tie_seed);

inline constexpr int kPatternSchemaVersion = 1;

nlohmann::json to_json(const PatternModel& model);
PatternModel pattern_model_from_json(const nlohmann::json& j);
void save_patterns(const PatternModel& model, const std::filesystem::path& path,
                   const nlohmann::json& provenance = nullptr);
PatternModel load_patterns(const std::filesystem::path& path);

nlohmann::json to_json(const ReliabilityReport& report, const PatternModel& model);

}  // namespace rfc
