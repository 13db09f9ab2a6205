#pragma once

#include <cstddef>
#include <span>

#include "rfc/dataset.hpp"
#include "rfc/forest.hpp"

namespace rfc::detail {

/// Draws the bootstrap sample of tree `tree_index` and grows it breadth-first.
/// Uses only the stream mix_seed(params.seed, tree_index), so trees can be
/// built in any order. params must already be resolved.
Tree grow_tree(const Dataset& ds, std::span<const std::size_t> train, std::size_t tree_index,
               const ForestParams& params);

/// Class counts (with multiplicity) of a multiset of rows.
std::vector<double> class_counts(const Dataset& ds, std::span<const std::size_t> rows);

/// Shared validation of fit() inputs.
void check_fit_inputs(const Dataset& ds, std::span<const std::size_t> train);

/// Fills class names, feature names, root average etc. around grown trees.
Forest assemble_forest(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params,
                       std::vector<Tree> trees);

}  // namespace rfc::detail
