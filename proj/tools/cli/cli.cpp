#include "cli.hpp"

#include <limits>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rfc/errors.hpp"
#include "rfc/forest.hpp"
#include "rfc/parallel.hpp"
#include "rfc/patterns.hpp"

namespace rfc::cli {

namespace {

const CLI::Validator kOpenUnit(
    [](std::string& s) -> std::string {
      try {
        const double v = std::stod(s);
        if (v > 0.0 && v < 1.0) return {};
      } catch (const std::exception&) {
      }
      return "value must lie strictly between 0 and 1";
    },
    "(0,1)");

void add_data_flags(Settings& s, DataFlags& d, bool with_class_order) {
  s.add("data", d.data, "CSV file with a header row");
  s.add("label", d.label, "Label column name");
  s.add("drop", d.drop, "Comma-separated columns to ignore");
  if (with_class_order) s.add("class-order", d.class_order, "Comma-separated class names in index order");
}

struct Command {
  CLI::App* app;
  std::unique_ptr<Settings> settings;
  std::function<std::uint64_t()> seed;
  std::function<void(const Provenance&, Io)> action;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Random forests with per-instance feature contributions and reliability patterns", "rfc");
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::string config_path;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); never changes results")
      ->check(CLI::NonNegativeNumber);

  TrainFlags train;
  ExplainFlags explain;
  PatternsFlags patterns;
  ReliabilityFlags reliability;
  RobustnessFlags robustness;
  ImportanceFlags importance;
  FixtureFlags fixture;
  std::vector<Command> commands;

  auto make = [&](const char* name, const char* help) -> Settings& {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Flat key=value file; flags take precedence");
    commands.push_back({sub, std::make_unique<Settings>(sub), nullptr, nullptr});
    return *commands.back().settings;
  };

  {
    auto& s = make("train", "Train a forest and report held-out accuracy");
    add_data_flags(s, train.data, true);
    s.add("trees", train.trees, "Number of trees")->check(CLI::PositiveNumber);
    s.add("mtry", train.mtry, "Features tried per split (0 = floor(sqrt(F)))");
    s.add("min-node-size", train.min_node_size, "Nodes smaller than this are not split")->check(CLI::PositiveNumber);
    s.add("split", train.split, "Training fraction")->check(kOpenUnit);
    s.add("seed", train.seed, "Random seed");
    s.add("model", train.model, "Model file to write");
    s.add("report", train.report, "Report file (default: standard output)");
    commands.back().seed = [&] { return train.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_train(train, p, io); };
  }
  {
    auto& s = make("explain", "Feature contributions per instance");
    s.add("model", explain.model, "Model file");
    add_data_flags(s, explain.data, false);
    s.add("rows", explain.rows, "Rows to explain")->check(CLI::IsMember({"all", "train", "test"}));
    s.add("instance", explain.instance, "Single instance id (1-based; 0 = all rows)")->check(CLI::NonNegativeNumber);
    s.add("class", explain.target_class, "Contributions toward this class instead of the prediction");
    s.add("format", explain.format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
    s.add("seed", explain.seed, "Seed for breaking tied votes");
    s.add("out", explain.out, "Output file (default: standard output)");
    commands.back().seed = [&] { return explain.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_explain(explain, p, io); };
  }
  {
    auto& s = make("patterns", "Class medians and contribution clusters");
    s.add("model", patterns.model, "Model file");
    add_data_flags(s, patterns.data, false);
    s.add("rows", patterns.rows, "Rows to learn patterns from")->check(CLI::IsMember({"all", "train", "test"}));
    s.add("k", patterns.k, "Clusters per class (0 = BIC choice)");
    s.add("k-max", patterns.k_max, "Largest k considered by BIC")->check(CLI::PositiveNumber);
    s.add("k-rule", patterns.k_rule, "Automatic k: elbow (capped by BIC) or bic")
        ->check(CLI::IsMember({"elbow", "bic"}));
    s.add("seed", patterns.seed, "Random seed");
    s.add("min-core-fraction", patterns.min_core_fraction, "Core cluster: minimum share of class support");
    s.add("min-core-vote", patterns.min_core_vote, "Core cluster: minimum average vote fraction");
    s.add("max-core-relative-distance", patterns.max_core_relative_distance,
          "Core cluster: largest avg distance as a multiple of the tightest candidate (inf disables)")
        ->check(CLI::Range(1.0, std::numeric_limits<double>::infinity()));
    s.add("vote-threshold", patterns.vote_threshold, "Vote fraction required for a trusted prediction");
    s.add("distance-percentile", patterns.distance_percentile, "Percentile of member distances used as threshold")
        ->check(CLI::Range(0.0, 100.0));
    s.add("out", patterns.out, "Pattern file to write");
    commands.back().seed = [&] { return patterns.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_patterns(patterns, p, io); };
  }
  {
    auto& s = make("reliability", "Reliability report per instance");
    s.add("model", reliability.model, "Model file");
    s.add("patterns", reliability.patterns, "Pattern file");
    add_data_flags(s, reliability.data, false);
    s.add("rows", reliability.rows, "Rows to assess")->check(CLI::IsMember({"all", "train", "test"}));
    s.add("instance", reliability.instance, "Single instance id (1-based; 0 = all rows)")->check(CLI::NonNegativeNumber);
    s.add("seed", reliability.seed, "Seed for breaking tied votes");
    s.add("format", reliability.format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
    s.add("out", reliability.out, "Output file (default: standard output)");
    commands.back().seed = [&] { return reliability.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_reliability(reliability, p, io); };
  }
  {
    auto& s = make("robustness", "Median contributions over many independently trained forests");
    add_data_flags(s, robustness.data, true);
    s.add("models", robustness.models, "Number of forests")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    s.add("trees", robustness.trees, "Trees per forest")->check(CLI::PositiveNumber);
    s.add("mtry", robustness.mtry, "Features tried per split (0 = floor(sqrt(F)))");
    s.add("min-node-size", robustness.min_node_size, "Nodes smaller than this are not split")
        ->check(CLI::PositiveNumber);
    s.add("split", robustness.split, "Training fraction")->check(kOpenUnit);
    s.add("seed", robustness.seed, "Base seed");
    s.add("holdout", robustness.holdout, "Instance id (1-based; 0 = none) excluded from training and explained by every model")
        ->check(CLI::NonNegativeNumber);
    s.add("out", robustness.out, "Quantile table to write");
    s.add("accuracy-out", robustness.accuracy_out, "Accuracy file (default: <out>.accuracy.tsv)");
    commands.back().seed = [&] { return robustness.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_robustness(robustness, p, io); };
  }
  {
    auto& s = make("importance", "Gini and permutation importance");
    s.add("model", importance.model, "Model file");
    add_data_flags(s, importance.data, false);
    s.add("repeats", importance.repeats, "Permutations per feature and tree")->check(CLI::PositiveNumber);
    s.add("seed", importance.seed, "Random seed");
    s.add("out", importance.out, "Output file (default: standard output)");
    commands.back().seed = [&] { return importance.seed; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_importance(importance, p, io); };
  }
  {
    auto& s = make("fixture", "Write the ten-row Iris example and its two-tree forest");
    s.add("model", fixture.model, "Model file to write");
    s.add("data-out", fixture.data_out, "CSV file to write");
    commands.back().seed = [] { return std::uint64_t{7}; };
    commands.back().action = [&](const Provenance& p, Io io) { cmd_fixture(fixture, p, io); };
  }

  const Command* chosen = nullptr;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (const auto& c : commands) {
      if (c.app->parsed()) chosen = &c;
    }
    if (!config_path.empty()) apply_config(*chosen->settings, read_config_file(config_path));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (chosen == nullptr) err << "run 'rfc --help' for usage\n";
    return kExitUsage;
  }

  parallel::set_threads(threads);
  Provenance prov;
  prov.command = chosen->app->get_name();
  prov.config = chosen->settings->resolved();
  prov.seed = chosen->seed();
  prov.schema_version = prov.command == "patterns" ? kPatternSchemaVersion : kModelSchemaVersion;
  try {
    chosen->action(prov, Io{out, err});
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace rfc::cli
