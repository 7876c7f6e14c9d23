#pragma once

#include <span>
#include <vector>

#include "raylut/dataset.h"

namespace raylut {

using IdRows = std::vector<std::vector<idx_t>>;

/// Fraction of queries whose first k retrieved ids contain the true nearest
/// neighbor (gt column 0). Rows shorter than k are used as they are.
double recall_1_at_k(const IdRows& results, const NeighborTable& gt, std::size_t k);

/// Mean over queries of |first b retrieved ∩ first a true| / a.
double recall_a_at_b(const IdRows& results, const NeighborTable& gt, std::size_t a,
                     std::size_t b);

/// Rank correlation with average ranks for ties. 0 if either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Ascending ranks starting at 1; tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

} // namespace raylut
