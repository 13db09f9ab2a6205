#include "rfc/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rfc/errors.hpp"
#include "rfc/rng.hpp"

namespace rfc {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw std::invalid_argument("contributions, labels and predictions must be aligned");
}

std::vector<std::size_t> correct_members(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                                         std::size_t class_index) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == class_index && predictions[i] == class_index) members.push_back(i);
  }
  return members;
}

}  // namespace

std::vector<std::optional<MedianPattern>> class_medians(std::span<const ContributionVector> contribs,
                                                        std::span<const std::size_t> labels,
                                                        std::span<const std::size_t> predictions,
                                                        std::size_t n_classes) {
  check_aligned(contribs.size(), labels.size(), predictions.size());
  std::vector<std::optional<MedianPattern>> out(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto members = correct_members(labels, predictions, c);
    if (members.empty()) continue;
    const std::size_t F = contribs[members.front()].values.size();
    MedianPattern pattern;
    pattern.class_index = c;
    pattern.support = members.size();
    pattern.median.resize(F);
    std::vector<double> column(members.size());
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t i = 0; i < members.size(); ++i) column[i] = contribs[members[i]].values[f];
      pattern.median[f] = median(column);
    }
    out[c] = std::move(pattern);
  }
  return out;
}

std::vector<bool> select_core_clusters(std::span<const std::size_t> sizes, std::span<const double> avg_vote_fraction,
                                       std::span<const double> avg_distance, std::size_t support,
                                       const CoreRule& rule) {
  std::vector<bool> core(sizes.size(), false);
  double tightest = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    core[c] = sizes[c] > 0 &&
              static_cast<double>(sizes[c]) >= rule.min_size_fraction * static_cast<double>(support) &&
              avg_vote_fraction[c] >= rule.min_vote_fraction && avg_distance[c] <= rule.max_avg_distance;
    if (core[c]) tightest = std::min(tightest, avg_distance[c]);
  }
  if (std::isfinite(rule.max_relative_distance)) {
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      core[c] = core[c] && avg_distance[c] <= rule.max_relative_distance * tightest;
    }
  }
  return core;
}

std::size_t ClusterModel::support() const {
  std::size_t s = 0;
  for (std::size_t n : sizes) s += n;
  return s;
}

std::size_t ClusterModel::nearest(std::span<const double> fc) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d = squared_distance(fc, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ClusterModel build_cluster_model(std::span<const ContributionVector> contribs, std::span<const std::size_t> labels,
                                 std::span<const std::size_t> predictions, std::span<const double> vote_fractions,
                                 std::size_t class_index, const ClusterConfig& config) {
  check_aligned(contribs.size(), labels.size(), predictions.size());
  if (vote_fractions.size() != contribs.size()) throw std::invalid_argument("vote fractions must be aligned");
  const auto members = correct_members(labels, predictions, class_index);
  if (members.empty()) {
    throw std::invalid_argument("class " + std::to_string(class_index) + " has no correctly classified instances");
  }

  Matrix points;
  for (std::size_t i : members) points.append_row(contribs[i].values);
  const std::size_t F = points.cols();
  const std::size_t k = std::min(config.k, points.rows());
  const auto km = kmeans(points, k, config.seed, config.kmeans);

  ClusterModel model;
  model.class_index = class_index;
  model.k = k;
  model.centers = Matrix(k, F);
  model.variances = Matrix(k, F, config.variance_floor);
  model.sizes.assign(k, 0);
  model.avg_distance.assign(k, 0.0);
  model.avg_vote_fraction.assign(k, 0.0);
  model.distance_threshold.assign(k, 0.0);
  model.low_support.assign(k, false);

  std::vector<std::vector<std::size_t>> clusters(k);
  for (std::size_t i = 0; i < members.size(); ++i) clusters[km.assignment[i]].push_back(i);

  for (std::size_t c = 0; c < k; ++c) {
    const auto& idx = clusters[c];
    model.sizes[c] = idx.size();
    model.low_support[c] = idx.size() < 2;
    if (idx.empty()) continue;
    const double n = static_cast<double>(idx.size());
    auto center = model.centers.row(c);
    for (std::size_t i : idx) {
      for (std::size_t f = 0; f < F; ++f) center[f] += points(i, f);
    }
    for (double& v : center) v /= n;
    if (idx.size() >= 2) {
      for (std::size_t f = 0; f < F; ++f) {
        double ss = 0.0;
        for (std::size_t i : idx) ss += (points(i, f) - center[f]) * (points(i, f) - center[f]);
        model.variances(c, f) = std::max(config.variance_floor, ss / (n - 1.0));
      }
    }
    std::vector<double> distances;
    double vote_sum = 0.0;
    for (std::size_t i : idx) {
      distances.push_back(std::sqrt(squared_distance(points.row(i), center)));
      vote_sum += vote_fractions[members[i]];
    }
    double dist_sum = 0.0;
    for (double d : distances) dist_sum += d;
    model.avg_distance[c] = dist_sum / n;
    model.avg_vote_fraction[c] = vote_sum / n;
    model.distance_threshold[c] = quantile(distances, config.distance_percentile / 100.0);
  }
  model.core = select_core_clusters(model.sizes, model.avg_vote_fraction, model.avg_distance, members.size(),
                                    config.core);
  return model;
}

double log_likelihood(std::span<const double> fc, std::span<const double> center, std::span<const double> variances) {
  if (fc.size() != center.size() || fc.size() != variances.size()) {
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  }
  double ll = 0.0;
  for (std::size_t f = 0; f < fc.size(); ++f) {
    const double r = fc[f] - center[f];
    ll += -(r * r) / (2.0 * variances[f]) - 0.5 * std::log(2.0 * std::numbers::pi * variances[f]);
  }
  return ll;
}

PatternModel build_pattern_model(const Forest& forest, const Dataset& ds, std::span<const std::size_t> rows,
                                 const PatternConfig& config) {
  if (ds.labels.size() != ds.n_instances()) throw DataError("pattern discovery requires labeled data");
  ExplainOptions options;
  options.tie_seed = config.seed;
  const auto explanations = contributions_matrix(forest, ds, rows, options);

  std::vector<ContributionVector> contribs;
  std::vector<std::size_t> labels, predictions;
  std::vector<double> votes;
  for (const auto& e : explanations) {
    contribs.push_back(e.toward_target());
    labels.push_back(ds.labels[e.row]);
    // A tied vote is not a correct classification.
    predictions.push_back(e.prediction.tie ? forest.n_classes() : e.prediction.label);
    votes.push_back(e.prediction.vote_fraction);
  }

  PatternModel model;
  model.class_names = forest.class_names;
  model.feature_names = forest.feature_names;
  model.config = config;
  model.n_instances = rows.size();
  model.medians = class_medians(contribs, labels, predictions, forest.n_classes());
  model.clusters.resize(forest.n_classes());
  model.k_selection.resize(forest.n_classes());
  for (std::size_t c = 0; c < forest.n_classes(); ++c) {
    if (!model.medians[c]) continue;
    Matrix points;
    for (std::size_t i = 0; i < contribs.size(); ++i) {
      if (labels[i] == c && predictions[i] == c) points.append_row(contribs[i].values);
    }
    const std::uint64_t class_seed = mix_seed(config.seed, c);
    model.k_selection[c] = choose_k(points, config.k_max, class_seed, config.kmeans);
    ClusterConfig cc;
    const auto& sel = *model.k_selection[c];
    cc.k = config.k > 0 ? config.k : config.k_rule == KRule::bic ? sel.k : std::min(sel.k, sel.elbow_k);
    cc.seed = class_seed;
    cc.core = config.core;
    cc.variance_floor = config.variance_floor;
    cc.distance_percentile = config.distance_percentile;
    cc.kmeans = config.kmeans;
    model.clusters[c] = build_cluster_model(contribs, labels, predictions, votes, c, cc);
  }
  return model;
}

std::optional<double> ReliabilityReport::best_log_likelihood(std::size_t class_index) const {
  std::optional<double> best;
  for (const auto& ll : log_likelihoods) {
    if (ll.class_index == class_index && (!best || ll.value > *best)) best = ll.value;
  }
  return best;
}

std::pair<Verdict, std::vector<std::string>> derive_verdict(const ReliabilityReport& report) {
  std::vector<std::string> reasons;
  if (report.tie) reasons.emplace_back("tied_vote");
  if (report.vote_fraction < report.vote_threshold) reasons.emplace_back("vote_below_threshold");
  if (!report.assigned_is_core) reasons.emplace_back("non_core_cluster");
  if (report.distance_to_center > report.distance_threshold) reasons.emplace_back("far_from_center");
  const bool trusted = report.vote_fraction >= report.vote_threshold && report.assigned_is_core &&
                       report.distance_to_center <= report.distance_threshold;
  return {trusted ? Verdict::trusted : Verdict::doubtful, trusted ? std::vector<std::string>{} : reasons};
}

ReliabilityReport reliability_report(const Forest& forest, const PatternModel& model, std::span<const double> x,
                                     std::uint64_t tie_seed) {
  if (model.clusters.size() != forest.n_classes()) throw ModelError("pattern model does not match the forest");
  const auto votes = predict_proba(forest, x);
  const auto prediction = resolve_vote(votes, tie_seed);
  const auto fc = feature_contributions_full(forest, x);

  ReliabilityReport report;
  report.predicted_class = prediction.label;
  report.tie = prediction.tie;
  report.vote_fraction = prediction.vote_fraction;
  report.vote_threshold = model.config.vote_threshold;

  const auto& own = model.clusters[prediction.label];
  if (!own) {
    throw ModelError("no cluster model for predicted class '" + forest.class_names[prediction.label] + "'");
  }
  const auto toward_pred = fc.project(prediction.label);
  report.assigned_cluster = own->nearest(toward_pred.values);
  report.assigned_is_core = own->core[report.assigned_cluster];
  report.distance_to_center = std::sqrt(squared_distance(toward_pred.values, own->centers.row(report.assigned_cluster)));
  report.distance_threshold = own->distance_threshold[report.assigned_cluster];

  for (std::size_t c = 0; c < model.clusters.size(); ++c) {
    const auto& cm = model.clusters[c];
    if (!cm) continue;
    const auto toward = fc.project(c);
    for (std::size_t j = 0; j < cm->k; ++j) {
      if (!cm->core[j]) continue;
      report.log_likelihoods.push_back({c, j, log_likelihood(toward.values, cm->centers.row(j), cm->variances.row(j))});
    }
  }
  std::tie(report.verdict, report.reasons) = derive_verdict(report);
  return report;
}

}  // namespace rfc
