#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "rfc/analysis.hpp"
#include "rfc/contrib.hpp"
#include "rfc/errors.hpp"
#include "rfc/forest.hpp"
#include "rfc/parallel.hpp"
#include "rfc/patterns.hpp"
#include "rfc/rng.hpp"

namespace rfc::cli {

using nlohmann::json;

namespace {

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw CLI::RequiredError(flag);
}

void write_output(const std::string& path, const std::string& text, Io io) {
  if (path.empty() || path == "-") {
    io.out << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Data scored by a saved model: classes follow the model, columns are
// reduced to the model's features.
Dataset load_for_model(const DataFlags& flags, const Forest& forest) {
  require(flags.data, "--data");
  CsvOptions options;
  options.label_column = flags.label.empty() ? forest.label_column : flags.label;
  options.class_order = forest.class_names;
  options.drop_columns = flags.drop;
  options.label_optional = true;
  const Dataset ds = load_csv(flags.data, options);
  return select_features(ds, forest.feature_names);
}

Forest load_model(const std::string& path) {
  require(path, "--model");
  return load(path);
}

// A model loaded without node statistics gets them from its training data.
void ensure_statistics(Forest& forest, const Dataset& ds) {
  if (forest.has_statistics) return;
  if (!ds.labeled() || ds.labels.empty()) throw DataError("model lacks node statistics and data has no labels");
  forest = annotate_node_distributions(std::move(forest), ds);
}

std::vector<std::size_t> select_rows(const std::string& which, std::size_t instance, const Forest& forest,
                                     const Dataset& ds) {
  const std::size_t n = ds.n_instances();
  if (instance > 0) {
    if (instance > n) {
      throw std::out_of_range("unknown instance id " + std::to_string(instance) + " (data has " +
                              std::to_string(n) + " rows)");
    }
    return {instance - 1};
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (which == "all") return all;
  for (std::size_t r : forest.train_rows) {
    if (r >= n) throw DataError("data has fewer rows than the model's training set; pass the training file");
  }
  if (which == "train") return forest.train_rows;
  std::vector<bool> in_train(n, false);
  for (std::size_t r : forest.train_rows) in_train[r] = true;
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_train[i]) test.push_back(i);
  }
  return test;
}

std::string actual_name(const Dataset& ds, std::size_t row) {
  return ds.labels.empty() ? "NA" : ds.class_names[ds.labels[row]];
}

std::size_t class_index(const Forest& forest, const std::string& name) {
  for (std::size_t k = 0; k < forest.n_classes(); ++k) {
    if (forest.class_names[k] == name) return k;
  }
  throw DataError("unknown class '" + name + "' (model classes: " + join(forest.class_names, ',') + ")");
}

}  // namespace

void cmd_train(const TrainFlags& flags, const Provenance& prov, Io io) {
  require(flags.data.data, "--data");
  require(flags.data.label, "--label");
  require(flags.model, "--model");
  CsvOptions options;
  options.label_column = flags.data.label;
  options.class_order = flags.data.class_order;
  options.drop_columns = flags.data.drop;
  const Dataset ds = load_csv(flags.data.data, options);
  const Partition part = split(ds, {flags.split, flags.seed});

  ForestParams params;
  params.n_trees = flags.trees;
  params.mtry = flags.mtry;
  params.min_node_size = flags.min_node_size;
  params.seed = flags.seed;
  Forest forest = fit(ds, part.train, params);
  forest.label_column = flags.data.label;
  save(forest, flags.model, prov.to_json());

  const std::size_t K = ds.n_classes();
  std::vector<std::size_t> confusion(K * K, 0);
  std::size_t correct = 0;
  for (std::size_t row : part.test) {
    const auto p = predict(forest, ds.row(row), mix_seed(flags.seed, row));
    ++confusion[ds.labels[row] * K + p.label];
    correct += p.label == ds.labels[row];
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(part.test.size());

  std::ostringstream report;
  report << prov.tsv_header();
  report << "metric\tvalue\n";
  report << "n_train\t" << part.train.size() << "\n";
  report << "n_test\t" << part.test.size() << "\n";
  report << "n_trees\t" << forest.n_trees() << "\n";
  report << "mtry\t" << forest.params.mtry << "\n";
  report << "accuracy\t" << format_double(accuracy) << "\n";
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t p = 0; p < K; ++p) {
      report << "confusion[" << ds.class_names[a] << "," << ds.class_names[p] << "]\t" << confusion[a * K + p]
             << "\n";
    }
  }
  write_output(flags.report, report.str(), io);
  io.err << "trained " << forest.n_trees() << " trees on " << part.train.size() << " rows; test accuracy "
         << format_double(accuracy) << " (" << correct << "/" << part.test.size() << ")\n";
}

void cmd_explain(const ExplainFlags& flags, const Provenance& prov, Io io) {
  Forest forest = load_model(flags.model);
  const Dataset ds = load_for_model(flags.data, forest);
  ensure_statistics(forest, ds);
  ExplainOptions options;
  options.tie_seed = flags.seed;
  if (!flags.target_class.empty()) {
    options.mode = TargetMode::fixed_class;
    options.fixed_class = class_index(forest, flags.target_class);
  }
  const auto rows = select_rows(flags.rows, flags.instance, forest, ds);
  const auto explanations = contributions_matrix(forest, ds, rows, options);

  std::ostringstream text;
  if (flags.format == "json") {
    json items = json::array();
    for (const auto& e : explanations) {
      const auto toward = e.toward_target();
      json by_class = json::object();
      for (std::size_t k = 0; k < forest.n_classes(); ++k) by_class[forest.class_names[k]] = e.contributions.project(k).values;
      const auto votes = predict_proba(forest, ds.row(e.row));
      items.push_back({{"instance", e.row + 1},
                       {"actual", ds.labels.empty() ? json(nullptr) : json(actual_name(ds, e.row))},
                       {"prediction", forest.class_names[e.prediction.label]},
                       {"tie", e.prediction.tie},
                       {"target", forest.class_names[e.target_class]},
                       {"vote_fraction", e.target_probability},
                       {"votes", std::vector<double>(votes.values().begin(), votes.values().end())},
                       {"contributions", toward.values},
                       {"contributions_by_class", std::move(by_class)}});
    }
    json doc = {{"provenance", prov.to_json()},
                {"class_names", forest.class_names},
                {"feature_names", forest.feature_names},
                {"explanations", std::move(items)}};
    text << doc.dump(1) << "\n";
  } else {
    text << prov.tsv_header();
    text << "instance\tactual\tprediction\tresolved\ttarget\tvote_fraction";
    for (const auto& name : forest.feature_names) text << '\t' << name;
    text << '\n';
    for (const auto& e : explanations) {
      const auto& label = forest.class_names[e.prediction.label];
      text << e.row + 1 << '\t' << actual_name(ds, e.row) << '\t' << (e.prediction.tie ? "?" : label) << '\t'
           << label << '\t' << forest.class_names[e.target_class] << '\t' << format_double(e.target_probability);
      for (double v : e.toward_target().values) text << '\t' << format_double(v);
      text << '\n';
    }
  }
  write_output(flags.out, text.str(), io);
}

void cmd_patterns(const PatternsFlags& flags, const Provenance& prov, Io io) {
  require(flags.out, "--out");
  Forest forest = load_model(flags.model);
  const Dataset ds = load_for_model(flags.data, forest);
  if (ds.labels.empty() && ds.n_instances() > 0) throw DataError("pattern discovery needs labeled data");
  ensure_statistics(forest, ds);

  PatternConfig config;
  config.k = flags.k;
  config.k_max = flags.k_max;
  config.k_rule = flags.k_rule == "bic" ? KRule::bic : KRule::elbow;
  config.seed = flags.seed;
  config.core.min_size_fraction = flags.min_core_fraction;
  config.core.min_vote_fraction = flags.min_core_vote;
  config.core.max_relative_distance = flags.max_core_relative_distance;
  config.vote_threshold = flags.vote_threshold;
  config.distance_percentile = flags.distance_percentile;
  const auto rows = select_rows(flags.rows, 0, forest, ds);
  const PatternModel model = build_pattern_model(forest, ds, rows, config);
  save_patterns(model, flags.out, prov.to_json());

  for (std::size_t c = 0; c < model.class_names.size(); ++c) {
    const auto& name = model.class_names[c];
    if (!model.clusters[c]) {
      io.err << "warning: class '" << name << "' has no correctly classified instances; pattern missing\n";
      continue;
    }
    const auto& cm = *model.clusters[c];
    io.err << "class " << name << ": support " << cm.support() << ", bic k " << model.k_selection[c]->k
           << ", elbow k " << model.k_selection[c]->elbow_k << ", k " << cm.k << ", clusters";
    for (std::size_t j = 0; j < cm.k; ++j) {
      io.err << ' ' << cm.sizes[j] << (cm.core[j] ? "*" : "");
    }
    io.err << '\n';
  }
}

void cmd_reliability(const ReliabilityFlags& flags, const Provenance& prov, Io io) {
  Forest forest = load_model(flags.model);
  require(flags.patterns, "--patterns");
  const PatternModel patterns = load_patterns(flags.patterns);
  if (patterns.class_names != forest.class_names || patterns.feature_names != forest.feature_names) {
    throw ModelError("pattern file does not belong to this model");
  }
  const Dataset ds = load_for_model(flags.data, forest);
  ensure_statistics(forest, ds);
  const auto rows = select_rows(flags.rows, flags.instance, forest, ds);

  std::vector<ReliabilityReport> reports(rows.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(parallel::threads())
  for (std::size_t i = 0; i < rows.size(); ++i) {
    reports[i] = reliability_report(forest, patterns, ds.row(rows[i]), mix_seed(flags.seed, rows[i]));
  }

  std::ostringstream text;
  if (flags.format == "json") {
    json items = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      json j = to_json(reports[i], patterns);
      j["instance"] = rows[i] + 1;
      j["actual"] = ds.labels.empty() ? json(nullptr) : json(actual_name(ds, rows[i]));
      items.push_back(std::move(j));
    }
    text << json{{"provenance", prov.to_json()}, {"reports", std::move(items)}}.dump(1) << "\n";
  } else {
    text << prov.tsv_header();
    text << "instance\tactual\tpredicted\ttie\tvote_fraction\tassigned_cluster\tassigned_core\tdistance\t"
            "distance_threshold";
    for (const auto& name : patterns.class_names) text << "\tll_" << name;
    text << "\tverdict\treasons\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = reports[i];
      text << rows[i] + 1 << '\t' << actual_name(ds, rows[i]) << '\t' << forest.class_names[r.predicted_class] << '\t'
           << (r.tie ? 1 : 0) << '\t' << format_double(r.vote_fraction) << '\t' << r.assigned_cluster << '\t'
           << (r.assigned_is_core ? 1 : 0) << '\t' << format_double(r.distance_to_center) << '\t'
           << format_double(r.distance_threshold);
      for (std::size_t c = 0; c < patterns.class_names.size(); ++c) {
        const auto ll = r.best_log_likelihood(c);
        text << '\t' << (ll ? format_double(*ll) : "NA");
      }
      text << '\t' << (r.verdict == Verdict::trusted ? "trusted" : "doubtful") << '\t'
           << (r.reasons.empty() ? "-" : join(r.reasons, ',')) << '\n';
    }
  }
  write_output(flags.out, text.str(), io);
}

void cmd_robustness(const RobustnessFlags& flags, const Provenance& prov, Io io) {
  require(flags.data.data, "--data");
  require(flags.data.label, "--label");
  require(flags.out, "--out");
  CsvOptions options;
  options.label_column = flags.data.label;
  options.class_order = flags.data.class_order;
  options.drop_columns = flags.data.drop;
  const Dataset ds = load_csv(flags.data.data, options);

  RobustnessConfig config;
  config.models = flags.models;
  config.forest.n_trees = flags.trees;
  config.forest.mtry = flags.mtry;
  config.forest.min_node_size = flags.min_node_size;
  config.train_fraction = flags.split;
  config.base_seed = flags.seed;
  if (flags.holdout > 0) {
    if (flags.holdout > ds.n_instances()) {
      throw std::out_of_range("holdout instance " + std::to_string(flags.holdout) + " is out of range (1.." +
                              std::to_string(ds.n_instances()) + ")");
    }
    config.holdout = flags.holdout - 1;
  }
  const auto summary = robustness_run(ds, config);

  std::ostringstream table;
  table << prov.tsv_header();
  table << "feature\tclass\tpartition\tmin\tq25\tmedian\tq75\tmax\tn_models\n";
  for (const auto& row : summary.rows) {
    table << ds.feature_names[row.feature] << '\t' << ds.class_names[row.class_index] << '\t' << row.partition << '\t'
          << format_double(row.q.min) << '\t' << format_double(row.q.q25) << '\t' << format_double(row.q.median)
          << '\t' << format_double(row.q.q75) << '\t' << format_double(row.q.max) << '\t' << row.n_models << '\n';
  }
  write_output(flags.out, table.str(), io);

  std::ostringstream acc;
  acc << prov.tsv_header();
  acc << "model\tseed\taccuracy\n";
  for (std::size_t m = 0; m < summary.runs.size(); ++m) {
    acc << m + 1 << '\t' << summary.runs[m].seed << '\t' << format_double(summary.runs[m].accuracy) << '\n';
  }
  const std::string acc_path = flags.accuracy_out.empty() ? flags.out + ".accuracy.tsv" : flags.accuracy_out;
  write_output(acc_path, acc.str(), io);
  io.err << summary.runs.size() << " models; mean accuracy " << format_double(summary.mean_accuracy()) << "\n";
}

void cmd_importance(const ImportanceFlags& flags, const Provenance& prov, Io io) {
  Forest forest = load_model(flags.model);
  const Dataset ds = load_for_model(flags.data, forest);
  if (ds.labels.empty()) throw DataError("importance needs labeled data");
  ensure_statistics(forest, ds);
  select_rows("train", 0, forest, ds);
  const auto gini = gini_importance(forest);
  const auto perm = permutation_importance(forest, ds, forest.train_rows, flags.seed, flags.repeats);

  std::ostringstream text;
  text << prov.tsv_header();
  text << "feature\tgini\tpermutation\n";
  for (std::size_t f = 0; f < forest.n_features(); ++f) {
    text << forest.feature_names[f] << '\t' << format_double(gini[f]) << '\t' << format_double(perm.importance[f])
         << '\n';
  }
  write_output(flags.out, text.str(), io);
  if (perm.skipped_trees > 0) io.err << perm.skipped_trees << " trees without out-of-bag rows skipped\n";
}

void cmd_fixture(const FixtureFlags& flags, const Provenance& prov, Io io) {
  require(flags.model, "--model");
  const Forest forest = fixture_iris_toy_forest();
  save(forest, flags.model, prov.to_json());
  if (!flags.data_out.empty()) {
    std::ostringstream csv;
    csv << prov.tsv_header();
    write_csv(csv, fixture_iris_toy(), forest.label_column);
    write_output(flags.data_out, csv.str(), io);
  }
}

}  // namespace rfc::cli
