#pragma once

// Serial reference versions of the OpenMP kernels. They share the per-tree and
// per-instance building blocks with the parallel code but loop in plain index
// order; the test-suite checks that both produce identical results.

#include <span>
#include <vector>

#include "rfc/contrib.hpp"
#include "rfc/forest.hpp"

namespace rfc::reference {

Forest fit(const Dataset& ds, std::span<const std::size_t> train, const ForestParams& params);

std::vector<ClassDistribution> predict_proba_batch(const Forest& forest, const Dataset& ds,
                                                   std::span<const std::size_t> rows);

std::vector<Explanation> contributions_matrix(const Forest& forest, const Dataset& ds,
                                              std::span<const std::size_t> rows,
                                              const ExplainOptions& options);

}  // namespace rfc::reference
