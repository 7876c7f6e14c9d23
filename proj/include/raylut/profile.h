#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "raylut/index.h"

namespace raylut {

/// How many codebook entries the true top-k actually use, per subspace.
struct EntryUsage {
    std::size_t n_sub = 0;
    std::size_t entries = 0;
    std::vector<double> mean_ratio; // per subspace, over queries
    std::vector<double> max_ratio;  // per subspace, over queries
    /// n_sub x entries. Column r counts queries whose r-th closest entry (to
    /// the query's residual projection) is used by at least one true neighbor.
    std::vector<std::uint64_t> frequency;
};

/// Uses the first `top` columns of gt. Projections are taken relative to the
/// query's nearest centroid.
EntryUsage profile_entry_usage(const Index& index, const Dataset& queries,
                               const NeighborTable& gt, std::size_t top = 100);

/// cdf[r] = fraction of `ranks` that are <= r, for r in [0, entries).
std::vector<double> locality_cdf(std::span<const std::uint32_t> ranks, std::size_t entries);

struct LocalityProfile {
    std::size_t n_sub = 0;
    std::size_t entries = 0;
    std::vector<double> cdf; // n_sub x entries, mean over queries
    std::vector<double> mean_cdf; // entries, mean over subspaces
};

/// Per subspace, entries are ranked by distance to the query projection; the
/// CDF gives the share of true top-k members encoded within each rank.
LocalityProfile profile_locality_cdf(const Index& index, const Dataset& queries,
                                     const NeighborTable& gt, std::size_t top = 100);

} // namespace raylut
