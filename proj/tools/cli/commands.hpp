#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "provenance.hpp"

namespace rfc::cli {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct DataFlags {
  std::string data;
  std::string label;
  std::vector<std::string> drop;
  std::vector<std::string> class_order;
};

struct TrainFlags {
  DataFlags data;
  std::size_t trees = 500;
  std::size_t mtry = 0;
  std::size_t min_node_size = 1;
  double split = 2.0 / 3.0;
  std::uint64_t seed = 7;
  std::string model;
  std::string report;
};

struct ExplainFlags {
  std::string model;
  DataFlags data;
  std::string rows = "all";
  std::size_t instance = 0;
  std::string target_class;
  std::string format = "tsv";
  std::uint64_t seed = 7;
  std::string out;
};

struct PatternsFlags {
  std::string model;
  DataFlags data;
  std::string rows = "train";
  std::size_t k = 0;
  std::size_t k_max = 6;
  std::string k_rule = "elbow";
  std::uint64_t seed = 7;
  double min_core_fraction = 0.10;
  double min_core_vote = 0.9;
  double max_core_relative_distance = 2.0;
  double vote_threshold = 0.8;
  double distance_percentile = 95.0;
  std::string out;
};

struct ReliabilityFlags {
  std::string model;
  std::string patterns;
  DataFlags data;
  std::string rows = "test";
  std::size_t instance = 0;
  std::uint64_t seed = 7;
  std::string format = "tsv";
  std::string out;
};

struct RobustnessFlags {
  DataFlags data;
  std::size_t models = 100;
  std::size_t trees = 500;
  std::size_t mtry = 0;
  std::size_t min_node_size = 1;
  double split = 2.0 / 3.0;
  std::uint64_t seed = 7;
  std::size_t holdout = 0;
  std::string out;
  std::string accuracy_out;
};

struct ImportanceFlags {
  std::string model;
  DataFlags data;
  std::size_t repeats = 5;
  std::uint64_t seed = 7;
  std::string out;
};

struct FixtureFlags {
  std::string model;
  std::string data_out;
};

void cmd_train(const TrainFlags& flags, const Provenance& prov, Io io);
void cmd_explain(const ExplainFlags& flags, const Provenance& prov, Io io);
void cmd_patterns(const PatternsFlags& flags, const Provenance& prov, Io io);
void cmd_reliability(const ReliabilityFlags& flags, const Provenance& prov, Io io);
void cmd_robustness(const RobustnessFlags& flags, const Provenance& prov, Io io);
void cmd_importance(const ImportanceFlags& flags, const Provenance& prov, Io io);
void cmd_fixture(const FixtureFlags& flags, const Provenance& prov, Io io);

}  // namespace rfc::cli
