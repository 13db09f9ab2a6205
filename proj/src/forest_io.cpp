#include <fstream>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/forest.hpp"

namespace rfc {

using nlohmann::json;

json to_json(const Forest& forest) {
  json trees = json::array();
  for (const Tree& tree : forest.trees) {
    json nodes = json::array();
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      const Node& n = tree.nodes[id];
      json node = {{"id", id}, {"kind", n.is_terminal() ? "terminal" : "internal"}};
      if (n.is_terminal()) {
        node["split_feature"] = nullptr;
        node["split_value"] = nullptr;
        node["left"] = nullptr;
        node["right"] = nullptr;
      } else {
        node["split_feature"] = n.split_feature;
        node["split_value"] = n.split_value;
        node["left"] = n.left;
        node["right"] = n.right;
      }
      if (forest.has_statistics) {
        node["y_mean"] = std::vector<double>(n.y_mean.values().begin(), n.y_mean.values().end());
        node["n_train"] = n.n_train;
      }
      nodes.push_back(std::move(node));
    }
    trees.push_back({{"bag_counts", tree.bag_counts}, {"nodes", std::move(nodes)}});
  }
  json j = {
      {"schema_version", kModelSchemaVersion},
      {"class_names", forest.class_names},
      {"feature_names", forest.feature_names},
      {"label_column", forest.label_column},
      {"train_rows", forest.train_rows},
      {"hyperparams",
       {{"n_trees", forest.params.n_trees},
        {"mtry", forest.params.mtry},
        {"min_node_size", forest.params.min_node_size},
        {"seed", forest.params.seed}}},
      {"trees", std::move(trees)},
  };
  if (forest.has_statistics) {
    j["y_root_avg"] = std::vector<double>(forest.y_root_avg.values().begin(), forest.y_root_avg.values().end());
  }
  return j;
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ModelError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ModelError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Forest forest_from_json(const json& j) {
  if (!j.is_object()) throw ModelError("model file is not a JSON object");
  const int version = field<int>(j, "schema_version", "model");
  if (version != kModelSchemaVersion) {
    throw ModelError("unsupported model schema version " + std::to_string(version) + " (expected " +
                     std::to_string(kModelSchemaVersion) + ")");
  }
  Forest forest;
  forest.class_names = field<std::vector<std::string>>(j, "class_names", "model");
  forest.feature_names = field<std::vector<std::string>>(j, "feature_names", "model");
  if (j.contains("label_column")) forest.label_column = field<std::string>(j, "label_column", "model");
  if (j.contains("train_rows")) forest.train_rows = field<std::vector<std::size_t>>(j, "train_rows", "model");
  const json& hp = j.contains("hyperparams") ? j.at("hyperparams") : json::object();
  if (hp.contains("n_trees")) forest.params.n_trees = field<std::size_t>(hp, "n_trees", "hyperparams");
  if (hp.contains("mtry")) forest.params.mtry = field<std::size_t>(hp, "mtry", "hyperparams");
  if (hp.contains("min_node_size")) forest.params.min_node_size = field<std::size_t>(hp, "min_node_size", "hyperparams");
  if (hp.contains("seed")) forest.params.seed = field<std::uint64_t>(hp, "seed", "hyperparams");

  const auto& trees = j.contains("trees") ? j.at("trees") : throw ModelError("model: missing field 'trees'");
  if (!trees.is_array()) throw ModelError("model: 'trees' must be an array");
  bool any_missing = false;
  bool any_present = false;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const std::string where = "tree " + std::to_string(t);
    const json& jt = trees[t];
    Tree tree;
    if (jt.contains("bag_counts")) tree.bag_counts = field<std::vector<std::uint32_t>>(jt, "bag_counts", where);
    const json& nodes = jt.contains("nodes") ? jt.at("nodes") : throw ModelError(where + ": missing field 'nodes'");
    if (!nodes.is_array()) throw ModelError(where + ": 'nodes' must be an array");
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      const json& jn = nodes[id];
      const std::string at = where + " node " + std::to_string(id);
      if (jn.contains("id") && field<std::size_t>(jn, "id", at) != id) throw ModelError(at + ": id must equal its position");
      Node node;
      const auto kind = field<std::string>(jn, "kind", at);
      if (kind == "internal") {
        node.kind = NodeKind::internal;
        node.split_feature = field<std::size_t>(jn, "split_feature", at);
        node.split_value = field<double>(jn, "split_value", at);
        node.left = field<std::int32_t>(jn, "left", at);
        node.right = field<std::int32_t>(jn, "right", at);
      } else if (kind != "terminal") {
        throw ModelError(at + ": unknown node kind '" + kind + "'");
      }
      const bool has_stats = jn.contains("y_mean") && !jn.at("y_mean").is_null();
      if (has_stats) {
        node.y_mean = ClassDistribution(field<std::vector<double>>(jn, "y_mean", at));
        node.n_train = field<std::size_t>(jn, "n_train", at);
        any_present = true;
      } else {
        any_missing = true;
      }
      tree.nodes.push_back(std::move(node));
    }
    forest.trees.push_back(std::move(tree));
  }
  if (any_missing && any_present) throw ModelError("model: node statistics present for only some nodes");
  forest.has_statistics = !any_missing;
  if (forest.has_statistics) {
    forest.y_root_avg = ClassDistribution(field<std::vector<double>>(j, "y_root_avg", "model"));
    if (forest.y_root_avg.size() != forest.n_classes()) throw ModelError("y_root_avg has wrong length");
  }
  validate(forest);
  return forest;
}

std::string dump_model(const Forest& forest, const json& provenance) {
  json j = to_json(forest);
  if (!provenance.is_null()) j["provenance"] = provenance;
  return j.dump(1) + "\n";
}

void save(const Forest& forest, const std::filesystem::path& path, const json& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << dump_model(forest, provenance);
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Forest load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path.string() + ": not a valid model file (" + e.what() + ")");
  }
  return forest_from_json(j);
}

}  // namespace rfc
