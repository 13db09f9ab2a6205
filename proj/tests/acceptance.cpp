// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rfc/analysis.hpp"
#include "rfc/contrib.hpp"
#include "rfc/forest.hpp"
#include "rfc/kmeans.hpp"
#include "rfc/patterns.hpp"
#include "rfc/rng.hpp"
#include "test_support.hpp"

using namespace rfc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
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

std::vector<double> probe(Rng& rng, std::size_t F, double lo, double hi) {
  std::vector<double> x(F);
  for (double& v : x) v = lo + rng.uniform() * (hi - lo);
  return x;
}

constexpr std::array<std::uint64_t, 10> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

Outcome ac1() {
  struct Row {
    double y_hat;
    std::array<double, 4> fc;
    bool tie;
  };
  const std::array<Row, 10> expected{{
      {0.0, {0, 0.125, -0.625, 0}, false},
      {0.0, {0, -0.125, -0.375, 0}, false},
      {0.0, {0, 0.125, -0.625, 0}, false},
      {0.0, {0, -0.125, -0.375, 0}, false},
      {0.0, {0, -0.125, -0.375, 0}, false},
      {1.0, {0, 0, 0.5, 0}, false},
      {1.0, {0, 0, 0.5, 0}, false},
      {0.5, {0, 0.125, -0.125, 0}, true},
      {1.0, {0, 0, 0.5, 0}, false},
      {0.5, {0, 0, 0, 0}, true},
  }};
  const auto dir = support::temp_dir("acceptance_ac1");
  const auto start = std::chrono::steady_clock::now();
  const auto fx = support::run_cli({"fixture", "--model", (dir / "m.json").string(), "--data-out",
                                    (dir / "toy.csv").string()});
  const auto ex = support::run_cli({"explain", "--model", (dir / "m.json").string(), "--data",
                                    (dir / "toy.csv").string(), "--class", "virginica"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (fx.code != 0 || ex.code != 0) return {false, "cli failed: " + fx.err + ex.err};
  const auto rows = tsv(ex.out);
  if (rows.size() != 11) return {false, fmt("expected 10 data rows, got %zu", rows.size() - 1)};
  double max_err = 0.0;
  int entries = 0;
  bool ties_ok = true;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = rows[i + 1];
    if (r.size() != 10) return {false, "unexpected column count"};
    ties_ok = ties_ok && ((r[2] == "?") == expected[i].tie);
    max_err = std::max(max_err, std::abs(std::stod(r[5]) - expected[i].y_hat));
    for (std::size_t f = 0; f < 4; ++f, ++entries) {
      max_err = std::max(max_err, std::abs(std::stod(r[6 + f]) - expected[i].fc[f]));
    }
  }
  return {max_err <= 1e-12 && ties_ok && entries == 40 && secs < 1.0,
          fmt("40 entries + 10 votes, max abs error %.3g, ties at x8/x10 %s, %.3f s", max_err,
              ties_ok ? "flagged" : "WRONG", secs)};
}

Outcome ac2() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  int probes = 0, forests = 0, impure = 0;
  while (forests < 10) {
    const Dataset ds = support::random_dataset(rng, 150, 6, 3, forests % 2 ? 5 : 0);
    const Forest f = fit(ds, support::all_rows(ds), {50, 0, 1, rng.next()});
    // Zero-gain (XOR-like) bags stop impure under the positive-gain rule; the
    // identity is only claimed when every leaf is pure.
    if (!check_unanimity(f)) {
      ++impure;
      continue;
    }
    ++forests;
    for (int p = 0; p < 100; ++p, ++probes) {
      worst = std::max(worst, verify_decomposition(f, probe(rng, f.n_features(), -1.0, 5.0)));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-10 && probes == 1000 && secs < 30.0,
          fmt("%d probes over %d unanimous forests (%d non-unanimous skipped), max residual %.3g, %.2f s", probes,
              forests, impure, worst, secs)};
}

Outcome ac3() {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t F = 1 + rng.below(8);
    const Dataset ds = support::random_dataset(rng, 2 + rng.below(49), F, 2 + rng.below(3), rng.below(2) ? 4 : 0);
    const Forest f = fit(ds, support::all_rows(ds), {1 + rng.below(10), 1 + rng.below(F), 1, rng.next()});
    for (int p = 0; p < 5; ++p) {
      const auto x = probe(rng, F, -1.0, 4.0);
      for (const Tree& t : f.trees) {
        const auto c = tree_contributions(t, x, f.n_features(), f.n_classes());
        const Node& leaf = t.nodes[t.terminal_for(x)];
        for (std::size_t k = 0; k < f.n_classes(); ++k) {
          worst = std::max(worst, std::abs(c.column_sum(k) - (leaf.y_mean[k] - t.root().y_mean[k])));
        }
      }
    }
  }
  return {worst <= 1e-12, fmt("200 forests x 5 probes, max |sum - (terminal - root)| %.3g", worst)};
}

Outcome ac4() {
  Rng rng(404);
  int forests = 0, mismatches = 0;
  while (forests < 300) {
    const std::size_t F = 1 + rng.below(4);
    const Dataset ds = support::random_dataset(rng, 2 + rng.below(8), F, 2 + rng.below(2), rng.below(2) ? 3 : 0);
    const Forest f = fit(ds, support::all_rows(ds), {1 + rng.below(3), 1 + rng.below(F), 1, rng.next()});
    if (std::any_of(f.trees.begin(), f.trees.end(), [](const Tree& t) { return t.depth() > 3; })) continue;
    ++forests;
    for (int p = 0; p < 5; ++p) {
      const auto x = probe(rng, F, -0.5, 3.5);
      if (!(feature_contributions_full(f, x) == support::oracle_contributions(f, x))) ++mismatches;
    }
  }
  double worst = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const Matrix pts = support::random_points(rng, n, 1 + rng.below(3));
    for (std::size_t k = 1; k <= 2; ++k, ++cases) {
      const double got = kmeans(pts, k, rng.next()).wcss;
      worst = std::max(worst, std::abs(got - support::oracle_best_wcss(pts, k)));
    }
  }
  return {mismatches == 0 && worst <= 1e-9,
          fmt("%d shallow forests x 5 probes, %d mismatches; %d k-means cases, max WCSS gap %.3g", forests,
              mismatches, cases, worst)};
}

// One BCW run per seed, shared by the BCW criteria.
struct BcwRun {
  std::uint64_t seed = 0;
  Forest forest;
  std::vector<std::size_t> test;
  double accuracy = 0.0;
  PatternModel patterns;
};

const std::vector<BcwRun>& bcw_runs(double* seconds = nullptr) {
  static std::vector<BcwRun> runs;
  static double elapsed = 0.0;
  if (runs.empty()) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset ds = support::load_bcw();
    for (std::uint64_t seed : kSeeds) {
      BcwRun run;
      run.seed = seed;
      const Partition part = split(ds, {2.0 / 3.0, seed});
      run.forest = fit(ds, part.train, {500, 0, 1, seed});
      run.test = part.test;
      std::size_t correct = 0;
      for (std::size_t r : part.test) correct += predict(run.forest, ds.row(r), mix_seed(seed, r)).label == ds.labels[r];
      run.accuracy = static_cast<double>(correct) / part.test.size();
      PatternConfig pc;
      pc.seed = seed;
      run.patterns = build_pattern_model(run.forest, ds, part.train, pc);
      runs.push_back(std::move(run));
    }
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  if (seconds) *seconds = elapsed;
  return runs;
}

Outcome ac5() {
  double secs = 0.0;
  const auto& runs = bcw_runs(&secs);
  const std::vector<std::string> expected{"F4", "F7", "F14", "F23", "F28"};
  int acc_ok = 0, top_ok = 0;
  std::string accs, hits;
  for (const BcwRun& run : runs) {
    acc_ok += run.accuracy >= 0.94;
    accs += fmt("%s%.4f", accs.empty() ? "" : " ", run.accuracy);
    const auto& med = run.patterns.medians[1];
    int hit = 0;
    if (med) {
      std::vector<std::size_t> order(med->median.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return std::abs(med->median[a]) > std::abs(med->median[b]); });
      for (std::size_t i = 0; i < 5 && i < order.size(); ++i) {
        const auto& name = run.patterns.feature_names[order[i]];
        hit += std::find(expected.begin(), expected.end(), name) != expected.end();
      }
    }
    top_ok += hit >= 4;
    hits += fmt("%s%d", hits.empty() ? "" : " ", hit);
  }
  return {acc_ok >= 9 && top_ok >= 8 && secs < 120.0,
          fmt("accuracy >= 0.94 in %d/10 [%s]; top-5 hits >= 4 in %d/10 [%s]; %.1f s incl. patterns", acc_ok,
              accs.c_str(), top_ok, hits.c_str(), secs)};
}

Outcome ac6() {
  int ok = 0;
  std::string per_seed;
  for (const BcwRun& run : bcw_runs()) {
    bool seed_ok = true;
    std::string desc;
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& cm = run.patterns.clusters[c];
      if (!cm) {
        seed_ok = false;
        continue;
      }
      std::size_t cores = 0, core = 0;
      for (std::size_t j = 0; j < cm->k; ++j) {
        if (cm->core[j]) {
          ++cores;
          core = j;
        }
      }
      const double share = cores ? static_cast<double>(cm->sizes[core]) / cm->support() : 0.0;
      seed_ok = seed_ok && cores == 1 && share >= 0.6 && cm->avg_vote_fraction[core] >= 0.9;
      desc += fmt("%s%zu/%zu", desc.empty() ? "" : ",", cores ? cm->sizes[core] : 0, cm->support());
    }
    ok += seed_ok;
    per_seed += fmt("%s%s%s", per_seed.empty() ? "" : " ", desc.c_str(), seed_ok ? "" : "!");
  }
  return {ok >= 8, fmt("one dominant decisive core per class in %d/10 seeds [core/support B,M: %s]", ok,
                       per_seed.c_str())};
}

Outcome ac7() {
  const Dataset ds = support::load_bcw();
  std::string per_seed;
  double at_default = 0.0;
  for (const BcwRun& run : bcw_runs()) {
    std::size_t agree = 0;
    for (std::size_t r : run.test) {
      const auto rep = reliability_report(run.forest, run.patterns, ds.row(r), mix_seed(run.seed, r));
      const auto ll0 = rep.best_log_likelihood(0);
      const auto ll1 = rep.best_log_likelihood(1);
      if (!ll0 || !ll1) continue;
      agree += (*ll1 > *ll0) == (ds.labels[r] == 1);
    }
    const double frac = static_cast<double>(agree) / run.test.size();
    if (run.seed == 7) at_default = frac;
    per_seed += fmt("%s%.3f", per_seed.empty() ? "" : " ", frac);
  }
  return {at_default >= 0.9,
          fmt("sign agreement %.3f at seed 7 (seeds 1..10: %s)", at_default, per_seed.c_str())};
}

Outcome ac8() {
  const Dataset ds = support::load_iris();
  const std::size_t pl = 2, pw = 3;
  int acc_ok = 0;
  bool medians_ok = true, cores_ok = true;
  std::string accs, cores;
  for (std::uint64_t seed : kSeeds) {
    const Partition part = split(ds, {100.0 / 150.0, seed});
    const Forest f = fit(ds, part.train, {500, 0, 1, seed});
    std::size_t correct = 0;
    for (std::size_t r : part.test) correct += predict(f, ds.row(r), mix_seed(seed, r)).label == ds.labels[r];
    const double acc = static_cast<double>(correct) / part.test.size();
    acc_ok += acc >= 0.9;
    accs += fmt("%s%.2f", accs.empty() ? "" : " ", acc);

    PatternConfig pc;
    pc.k = 2;
    pc.seed = seed;
    const PatternModel pm = build_pattern_model(f, ds, support::all_rows(ds), pc);
    std::string desc;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& med = pm.medians[c];
      medians_ok = medians_ok && med && med->median[pl] >= 0.0 && med->median[pw] >= 0.0;
      std::size_t largest = 0;
      if (pm.clusters[c]) {
        for (std::size_t j = 0; j < pm.clusters[c]->k; ++j) {
          if (pm.clusters[c]->core[j]) largest = std::max(largest, pm.clusters[c]->sizes[j]);
        }
      }
      cores_ok = cores_ok && largest >= 40;
      desc += fmt("%s%zu", desc.empty() ? "" : "/", largest);
    }
    cores += fmt("%s%s", cores.empty() ? "" : " ", desc.c_str());
  }
  return {acc_ok >= 9 && medians_ok && cores_ok,
          fmt("accuracy >= 0.90 in %d/10 [%s]; own-class petal medians >= 0 in all seeds: %s; largest core per "
              "class at k=2 [%s]",
              acc_ok, accs.c_str(), medians_ok ? "yes" : "no", cores.c_str())};
}

Outcome ac9() {
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = support::load_bcw();
  RobustnessConfig rc;
  rc.models = 100;
  rc.forest.n_trees = 500;
  rc.base_seed = 7;
  rc.holdout = 2;
  const RobustnessSummary sum = robustness_run(ds, rc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double mean = sum.mean_accuracy();
  bool positive_ok = true;
  std::string counts;
  for (const std::string name : {"F4", "F14", "F23", "F28"}) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    const std::size_t f = static_cast<std::size_t>(it - ds.feature_names.begin());
    int positive = 0;
    for (const ModelRun& run : sum.runs) positive += run.train_medians[1] && (*run.train_medians[1])[f] > 0.0;
    positive_ok = positive_ok && positive >= 95;
    counts += fmt("%s%s:%d", counts.empty() ? "" : " ", name.c_str(), positive);
  }
  return {mean >= 0.94 && mean <= 0.99 && positive_ok && secs < 600.0,
          fmt("mean accuracy %.4f over %zu models; positive class-1 medians [%s]; %.1f s", mean, sum.runs.size(),
              counts.c_str(), secs)};
}

Outcome ac10() {
  const auto dir = support::temp_dir("acceptance_ac10");
  auto p = [&](const char* name) { return (dir / name).string(); };
  const std::string iris = support::data_path("iris.csv").string();
  const std::string wdbc = support::data_path("wdbc.csv").string();
  std::string drop;
  for (const auto& d : support::kBcwDropped) drop += (drop.empty() ? "" : ",") + d;

  struct Command {
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Command> commands{
      {{"fixture", "--model", p("fx.json"), "--data-out", p("toy.csv")}, {p("fx.json"), p("toy.csv")}},
      {{"train", "--data", wdbc, "--label", "diagnosis", "--drop", drop, "--trees", "200", "--model", p("bcw.json"),
        "--report", p("bcw.tsv")},
       {p("bcw.json"), p("bcw.tsv")}},
      {{"train", "--data", iris, "--label", "Species", "--trees", "200", "--model", p("iris.json"), "--report",
        p("iris.tsv")},
       {p("iris.json"), p("iris.tsv")}},
      {{"explain", "--model", p("bcw.json"), "--data", wdbc, "--out", p("fc.tsv")}, {p("fc.tsv")}},
      {{"explain", "--model", p("iris.json"), "--data", iris, "--format", "json", "--out", p("fc.json")},
       {p("fc.json")}},
      {{"patterns", "--model", p("bcw.json"), "--data", wdbc, "--out", p("pat.json")}, {p("pat.json")}},
      {{"reliability", "--model", p("bcw.json"), "--patterns", p("pat.json"), "--data", wdbc, "--out", p("rel.tsv")},
       {p("rel.tsv")}},
      {{"importance", "--model", p("iris.json"), "--data", iris, "--out", p("imp.tsv")}, {p("imp.tsv")}},
      {{"robustness", "--data", iris, "--label", "Species", "--models", "4", "--trees", "50", "--holdout", "3",
        "--out", p("rob.tsv")},
       {p("rob.tsv"), p("rob.tsv.accuracy.tsv")}},
  };
  int identical = 0, total = 0;
  std::string failures;
  for (const Command& cmd : commands) {
    std::vector<std::string> first;
    for (const char* threads : {"1", "4"}) {
      auto args = cmd.args;
      args.insert(args.begin(), {"--threads", threads});
      const auto r = support::run_cli(args);
      if (r.code != 0) return {false, cmd.args[0] + " failed: " + r.err};
      std::vector<std::string> contents;
      for (const auto& file : cmd.files) contents.push_back(support::read_file(file));
      if (first.empty()) {
        first = contents;
        continue;
      }
      for (std::size_t i = 0; i < contents.size(); ++i) {
        ++total;
        if (contents[i] == first[i]) {
          ++identical;
        } else {
          failures += " " + cmd.files[i];
        }
      }
    }
  }
  return {identical == total, fmt("%d/%d output files byte-identical between --threads 1 and 4%s", identical, total,
                                  failures.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 toy fixture golden values", ac1},     {"AC2 decomposition identity", ac2},
      {"AC3 telescoping", ac3},        {"AC4 oracle equivalence", ac4},
      {"AC5 BCW accuracy/medians", ac5}, {"AC6 BCW core clusters", ac6},
      {"AC7 LL separation", ac7},      {"AC8 Iris multi-class", ac8},
      {"AC9 robustness", ac9},         {"AC10 determinism", ac10},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
