#include "rfc/reference.hpp"

#include "tree_builder.hpp"

namespace rfc::reference {

Forest fit(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params) {
  const ForestParams resolved = resolve_params(params, ds.n_features());
  detail::check_fit_inputs(ds, train);
  std::vector<Tree> trees;
  trees.reserve(resolved.n_trees);
  for (std::size_t t = 0; t < resolved.n_trees; ++t) trees.push_back(detail::grow_tree(ds, train, t, resolved));
  return detail::assemble_forest(ds, train, resolved, std::move(trees));
}

std::vector<ClassDistribution> predict_proba_batch(const Forest& forest, const Dataset& ds,
                                                   std::span<const std::size_t> rows) {
  std::vector<ClassDistribution> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(predict_proba(forest, ds.row(r)));
  return out;
}

std::vector<Explanation> contributions_matrix(const Forest& forest, const Dataset& ds,
                                              std::span<const std::size_t> rows,
                                              const ExplainOptions& options) {
  std::vector<Explanation> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(explain_instance(forest, ds.row(r), r, options));
  return out;
}

}  // namespace rfc::reference
