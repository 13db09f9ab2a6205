#include <cmath>
#include <fstream>

#include "rfc/errors.hpp"
#include "rfc/patterns.hpp"

namespace rfc {

using nlohmann::json;

namespace {


Matrix matrix_from(const json& rows, std::size_t cols, const std::string& where) {
  Matrix m;
  for (const auto& r : rows) {
    const auto values = r.get<std::vector<double>>();
    if (values.size() != cols) throw ModelError(where + ": row has " + std::to_string(values.size()) + " values");
    m.append_row(values);
  }
  if (m.rows() == 0) m = Matrix(0, cols);
  return m;
}

json core_rule_json(const CoreRule& rule) {
  json j = {{"min_size_fraction", rule.min_size_fraction}, {"min_vote_fraction", rule.min_vote_fraction}};
  j["max_avg_distance"] = std::isfinite(rule.max_avg_distance) ? json(rule.max_avg_distance) : json(nullptr);
  j["max_relative_distance"] =
      std::isfinite(rule.max_relative_distance) ? json(rule.max_relative_distance) : json(nullptr);
  return j;
}

CoreRule core_rule_from(const json& j) {
  CoreRule rule;
  rule.min_size_fraction = j.at("min_size_fraction").get<double>();
  rule.min_vote_fraction = j.at("min_vote_fraction").get<double>();
  if (j.contains("max_avg_distance") && !j.at("max_avg_distance").is_null()) {
    rule.max_avg_distance = j.at("max_avg_distance").get<double>();
  }
  rule.max_relative_distance = std::numeric_limits<double>::infinity();
  if (j.contains("max_relative_distance") && !j.at("max_relative_distance").is_null()) {
    rule.max_relative_distance = j.at("max_relative_distance").get<double>();
  }
  return rule;
}

const char* verdict_name(Verdict v) { return v == Verdict::trusted ? "trusted" : "doubtful"; }

}  // namespace

json to_json(const PatternModel& model) {
  const auto& cfg = model.config;
  json classes = json::array();
  for (std::size_t c = 0; c < model.class_names.size(); ++c) {
    json jc = {{"class", model.class_names[c]}};
    if (const auto& m = model.medians[c]) {
      jc["median"] = m->median;
      jc["support"] = m->support;
    } else {
      jc["median"] = nullptr;
      jc["support"] = 0;
    }
    if (const auto& ks = model.k_selection[c]) {
      json diag = json::array();
      for (const auto& d : ks->diagnostics) {
        diag.push_back({{"k", d.k}, {"wcss", d.wcss}, {"bic", d.bic}, {"sizes", d.sizes}});
      }
      jc["k_selection"] = {{"k", ks->k}, {"elbow_k", ks->elbow_k}, {"diagnostics", std::move(diag)}};
    } else {
      jc["k_selection"] = nullptr;
    }
    if (const auto& cm = model.clusters[c]) {
      json clusters = json::array();
      for (std::size_t j = 0; j < cm->k; ++j) {
        clusters.push_back({{"center", std::vector<double>(cm->centers.row(j).begin(), cm->centers.row(j).end())},
                            {"variance", std::vector<double>(cm->variances.row(j).begin(), cm->variances.row(j).end())},
                            {"size", cm->sizes[j]},
                            {"avg_distance", cm->avg_distance[j]},
                            {"avg_vote_fraction", cm->avg_vote_fraction[j]},
                            {"distance_threshold", cm->distance_threshold[j]},
                            {"core", static_cast<bool>(cm->core[j])},
                            {"low_support", static_cast<bool>(cm->low_support[j])}});
      }
      jc["clusters"] = std::move(clusters);
    } else {
      jc["clusters"] = nullptr;
    }
    classes.push_back(std::move(jc));
  }
  return {
      {"schema_version", kPatternSchemaVersion},
      {"class_names", model.class_names},
      {"feature_names", model.feature_names},
      {"n_instances", model.n_instances},
      {"config",
       {{"k", cfg.k},
        {"k_rule", cfg.k_rule == KRule::bic ? "bic" : "elbow"},
        {"k_max", cfg.k_max},
        {"seed", cfg.seed},
        {"core", core_rule_json(cfg.core)},
        {"variance_floor", cfg.variance_floor},
        {"distance_percentile", cfg.distance_percentile},
        {"vote_threshold", cfg.vote_threshold},
        {"kmeans",
         {{"restarts", cfg.kmeans.restarts},
          {"max_iterations", cfg.kmeans.max_iterations},
          {"tolerance", cfg.kmeans.tolerance}}}}},
      {"classes", std::move(classes)},
  };
}

PatternModel pattern_model_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kPatternSchemaVersion) {
      throw ModelError("unsupported pattern schema version " + j.at("schema_version").dump());
    }
    PatternModel model;
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.n_instances = j.at("n_instances").get<std::size_t>();
    const json& jc = j.at("config");
    auto& cfg = model.config;
    cfg.k = jc.at("k").get<std::size_t>();
    const auto rule = jc.at("k_rule").get<std::string>();
    if (rule != "bic" && rule != "elbow") throw ModelError("unknown k_rule '" + rule + "'");
    cfg.k_rule = rule == "bic" ? KRule::bic : KRule::elbow;
    cfg.k_max = jc.at("k_max").get<std::size_t>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    cfg.core = core_rule_from(jc.at("core"));
    cfg.variance_floor = jc.at("variance_floor").get<double>();
    cfg.distance_percentile = jc.at("distance_percentile").get<double>();
    cfg.vote_threshold = jc.at("vote_threshold").get<double>();
    cfg.kmeans.restarts = jc.at("kmeans").at("restarts").get<std::size_t>();
    cfg.kmeans.max_iterations = jc.at("kmeans").at("max_iterations").get<std::size_t>();
    cfg.kmeans.tolerance = jc.at("kmeans").at("tolerance").get<double>();

    const std::size_t K = model.class_names.size();
    const std::size_t F = model.feature_names.size();
    const json& classes = j.at("classes");
    if (classes.size() != K) throw ModelError("pattern model: one entry per class expected");
    model.medians.resize(K);
    model.clusters.resize(K);
    model.k_selection.resize(K);
    for (std::size_t c = 0; c < K; ++c) {
      const json& e = classes[c];
      const std::string where = "pattern class '" + model.class_names[c] + "'";
      if (!e.at("median").is_null()) {
        MedianPattern m{c, e.at("median").get<std::vector<double>>(), e.at("support").get<std::size_t>()};
        if (m.median.size() != F) throw ModelError(where + ": median has wrong length");
        model.medians[c] = std::move(m);
      }
      if (!e.at("k_selection").is_null()) {
        KSelection ks;
        ks.k = e.at("k_selection").at("k").get<std::size_t>();
        ks.elbow_k = e.at("k_selection").at("elbow_k").get<std::size_t>();
        for (const auto& d : e.at("k_selection").at("diagnostics")) {
          ks.diagnostics.push_back({d.at("k").get<std::size_t>(), d.at("wcss").get<double>(),
                                    d.at("bic").get<double>(), d.at("sizes").get<std::vector<std::size_t>>()});
        }
        model.k_selection[c] = std::move(ks);
      }
      if (!e.at("clusters").is_null()) {
        ClusterModel cm;
        cm.class_index = c;
        json centers = json::array(), variances = json::array();
        for (const auto& jl : e.at("clusters")) {
          centers.push_back(jl.at("center"));
          variances.push_back(jl.at("variance"));
          cm.sizes.push_back(jl.at("size").get<std::size_t>());
          cm.avg_distance.push_back(jl.at("avg_distance").get<double>());
          cm.avg_vote_fraction.push_back(jl.at("avg_vote_fraction").get<double>());
          cm.distance_threshold.push_back(jl.at("distance_threshold").get<double>());
          cm.core.push_back(jl.at("core").get<bool>());
          cm.low_support.push_back(jl.at("low_support").get<bool>());
        }
        cm.k = cm.sizes.size();
        if (cm.k == 0) throw ModelError(where + ": no clusters");
        cm.centers = matrix_from(centers, F, where);
        cm.variances = matrix_from(variances, F, where);
        model.clusters[c] = std::move(cm);
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed pattern model: ") + e.what());
  }
}

void save_patterns(const PatternModel& model, const std::filesystem::path& path, const json& provenance) {
  json j = to_json(model);
  if (!provenance.is_null()) j["provenance"] = provenance;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

PatternModel load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path.string() + ": not a valid pattern file (" + e.what() + ")");
  }
  return pattern_model_from_json(j);
}

json to_json(const ReliabilityReport& report, const PatternModel& model) {
  json lls = json::array();
  for (const auto& ll : report.log_likelihoods) {
    lls.push_back({{"class", model.class_names[ll.class_index]}, {"cluster", ll.cluster}, {"value", ll.value}});
  }
  return {
      {"predicted_class", model.class_names[report.predicted_class]},
      {"tie", report.tie},
      {"vote_fraction", report.vote_fraction},
      {"assigned_cluster", report.assigned_cluster},
      {"assigned_is_core", report.assigned_is_core},
      {"distance_to_center", report.distance_to_center},
      {"distance_threshold", report.distance_threshold},
      {"vote_threshold", report.vote_threshold},
      {"log_likelihoods", std::move(lls)},
      {"verdict", verdict_name(report.verdict)},
      {"reasons", report.reasons},
  };
}

}  // namespace rfc
