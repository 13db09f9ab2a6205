#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rfc/forest.hpp"
#include "rfc/patterns.hpp"
#include "test_support.hpp"

using namespace rfc;
using support::run_cli;

namespace {

std::string s(const std::filesystem::path& p) { return p.string(); }

struct Toy {
  std::filesystem::path dir, model, data;
};

Toy toy(const std::string& tag) {
  Toy t;
  t.dir = support::temp_dir(tag);
  t.model = t.dir / "fixture.json";
  t.data = t.dir / "toy.csv";
  const auto r = run_cli({"fixture", "--model", s(t.model), "--data-out", s(t.data)});
  EXPECT_EQ(r.code, 0) << r.err;
  return t;
}

std::vector<std::vector<std::string>> tsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(support::body(text));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"nonsense"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--trees", "0", "--data", "x.csv", "--label", "y", "--model", "m.json"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--split", "1.5"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--data", s(support::data_path("iris.csv")), "--model", "m.json"}).code, 2);
  EXPECT_EQ(run_cli({"explain", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitWithOne) {
  const Toy t = toy("cli_runtime");
  const auto r = run_cli({"explain", "--model", s(t.model), "--data", s(t.data), "--instance", "9999"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("9999"), std::string::npos);
  EXPECT_EQ(run_cli({"explain", "--model", s(t.dir / "missing.json"), "--data", s(t.data)}).code, 1);
  EXPECT_EQ(run_cli({"reliability", "--model", s(t.model), "--patterns", s(t.dir / "none.json"), "--data",
                     s(t.data)})
                .code,
            1);
  EXPECT_EQ(run_cli({"explain", "--model", s(t.model), "--data", s(t.data), "--class", "setosa"}).code, 1);
}

TEST(Cli, ExplainFixtureReproducesGoldenValues) {
  const Toy t = toy("cli_golden");
  const auto r = run_cli({"explain", "--model", s(t.model), "--data", s(t.data), "--class", "virginica"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = tsv(r.out);
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0][0], "instance");
  EXPECT_EQ(rows[8][2], "?");
  EXPECT_EQ(rows[10][2], "?");
  EXPECT_EQ(rows[1][2], "versicolor");
  EXPECT_DOUBLE_EQ(std::stod(rows[1][7]), 0.125);
  EXPECT_DOUBLE_EQ(std::stod(rows[1][8]), -0.625);
  EXPECT_DOUBLE_EQ(std::stod(rows[6][5]), 1.0);

  const auto one = run_cli({"explain", "--model", s(t.model), "--data", s(t.data), "--instance", "8", "--format",
                            "json", "--class", "virginica"});
  ASSERT_EQ(one.code, 0) << one.err;
  const auto j = nlohmann::json::parse(one.out);
  ASSERT_EQ(j["explanations"].size(), 1u);
  EXPECT_EQ(j["explanations"][0]["instance"], 8);
  EXPECT_EQ(j["explanations"][0]["tie"], true);
  EXPECT_EQ(j["provenance"]["command"], "explain");
}

TEST(Cli, OutputsCarryProvenanceAndReplayFromIt) {
  const Toy t = toy("cli_replay");
  const auto out = t.dir / "fc.tsv";
  ASSERT_EQ(run_cli({"explain", "--model", s(t.model), "--data", s(t.data), "--seed", "3", "--out", s(out)}).code, 0);
  const std::string first = support::read_file(out);
  EXPECT_EQ(first.rfind("# rfc explain\n", 0), 0u);
  EXPECT_NE(first.find("# config_hash="), std::string::npos);
  EXPECT_NE(first.find("# config.seed=3"), std::string::npos);
  std::filesystem::remove(out);
  const auto replay = run_cli({"explain", "--config", s(t.dir / "fc_copy.tsv")});
  EXPECT_EQ(replay.code, 2);  // missing config file is a usage error
  std::ofstream(t.dir / "fc_copy.tsv") << first;
  ASSERT_EQ(run_cli({"explain", "--config", s(t.dir / "fc_copy.tsv")}).code, 0);
  EXPECT_EQ(support::read_file(out), first);
}

TEST(Cli, FlagsOverrideConfigFileOverDefaults) {
  const auto dir = support::temp_dir("cli_config");
  const auto iris = s(support::data_path("iris.csv"));
  std::ofstream(dir / "run.cfg") << "# training settings\ndata=" << iris << "\nlabel=Species\ntrees=3\nseed=5\n";
  ASSERT_EQ(run_cli({"train", "--config", s(dir / "run.cfg"), "--model", s(dir / "a.json"), "--report",
                     s(dir / "a.tsv")})
                .code,
            0);
  EXPECT_EQ(load(dir / "a.json").n_trees(), 3u);
  EXPECT_EQ(load(dir / "a.json").params.seed, 5u);
  ASSERT_EQ(run_cli({"train", "--config", s(dir / "run.cfg"), "--trees", "4", "--model", s(dir / "b.json"),
                     "--report", s(dir / "b.tsv")})
                .code,
            0);
  EXPECT_EQ(load(dir / "b.json").n_trees(), 4u);
  std::ofstream(dir / "bad.cfg") << "colour=blue\n";
  EXPECT_EQ(run_cli({"train", "--config", s(dir / "bad.cfg")}).code, 2);
}

TEST(Cli, TrainIsReproducibleAcrossThreadCounts) {
  const auto dir = support::temp_dir("cli_threads");
  const auto iris = s(support::data_path("iris.csv"));
  std::vector<std::string> base{"train", "--data", iris, "--label", "Species", "--trees", "40"};
  auto with = [&](const std::string& name, const std::string& threads) {
    auto args = base;
    args.insert(args.end(), {"--model", s(dir / (name + ".json")), "--report", s(dir / (name + ".tsv")),
                             "--threads", threads});
    return run_cli(args).code;
  };
  ASSERT_EQ(with("one", "1"), 0);
  ASSERT_EQ(with("four", "4"), 0);
  EXPECT_EQ(support::body(support::read_file(dir / "one.tsv")), support::body(support::read_file(dir / "four.tsv")));
  // The model path is part of the recorded config, so compare with it normalized.
  auto model_text = [&](const std::string& name) {
    auto j = nlohmann::json::parse(support::read_file(dir / (name + ".json")));
    j.erase("provenance");
    return j.dump();
  };
  EXPECT_EQ(model_text("one"), model_text("four"));
  ASSERT_EQ(with("one", "2"), 0);
  ASSERT_EQ(with("four", "3"), 0);
  EXPECT_EQ(model_text("one"), model_text("four"));
}

TEST(Cli, PatternsReliabilityImportanceRobustness) {
  const auto dir = support::temp_dir("cli_flow");
  const auto iris = s(support::data_path("iris.csv"));
  ASSERT_EQ(run_cli({"train", "--data", iris, "--label", "Species", "--trees", "50", "--model", s(dir / "m.json"),
                     "--report", s(dir / "r.tsv")})
                .code,
            0);
  const auto p = run_cli({"patterns", "--model", s(dir / "m.json"), "--data", iris, "--k-max", "1", "--out",
                          s(dir / "p.json")});
  ASSERT_EQ(p.code, 0) << p.err;
  const PatternModel pm = load_patterns(dir / "p.json");
  for (const auto& cm : pm.clusters) {
    ASSERT_TRUE(cm);
    EXPECT_EQ(cm->k, 1u);
  }

  const auto rel = run_cli({"reliability", "--model", s(dir / "m.json"), "--patterns", s(dir / "p.json"), "--data",
                            iris});
  ASSERT_EQ(rel.code, 0) << rel.err;
  const auto rows = tsv(rel.out);
  EXPECT_EQ(rows.size(), 51u);
  EXPECT_EQ(rows[0].back(), "reasons");

  std::ofstream(dir / "empty.csv") << "Sepal.Length,Sepal.Width,Petal.Length,Petal.Width\n";
  const auto empty = run_cli({"reliability", "--model", s(dir / "m.json"), "--patterns", s(dir / "p.json"), "--data",
                              s(dir / "empty.csv"), "--rows", "all"});
  ASSERT_EQ(empty.code, 0) << empty.err;
  EXPECT_EQ(tsv(empty.out).size(), 1u);

  const auto imp = run_cli({"importance", "--model", s(dir / "m.json"), "--data", iris});
  ASSERT_EQ(imp.code, 0) << imp.err;
  EXPECT_EQ(tsv(imp.out).size(), 5u);

  std::vector<std::string> rob{"robustness", "--data", iris, "--label", "Species", "--models", "2", "--trees", "20",
                               "--holdout", "3"};
  auto rob_a = rob;
  rob_a.insert(rob_a.end(), {"--out", s(dir / "rob.tsv")});
  ASSERT_EQ(run_cli(rob_a).code, 0);
  const std::string first = support::read_file(dir / "rob.tsv");
  const std::string acc = support::read_file(dir / "rob.tsv.accuracy.tsv");
  ASSERT_EQ(run_cli(rob_a).code, 0);
  EXPECT_EQ(support::read_file(dir / "rob.tsv"), first);
  EXPECT_EQ(tsv(acc).size(), 3u);
  EXPECT_NE(first.find("\tholdout\t"), std::string::npos);
  auto rob_bad = rob;
  rob_bad[rob_bad.size() - 1] = "151";
  rob_bad.insert(rob_bad.end(), {"--out", s(dir / "bad.tsv")});
  EXPECT_EQ(run_cli(rob_bad).code, 1);
}
