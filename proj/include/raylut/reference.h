#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "raylut/dataset.h"
#include "raylut/index.h"

namespace raylut {

/// Exact top-k by full scan. L2 scores are squared distances computed as
/// |x|^2 - 2 x.q + |q|^2 (clamped at 0); ties go to the lower id.
NeighborTable brute_force_topk(const Dataset& base, const Dataset& queries, Metric metric,
                               std::size_t k);

/// Every entry's value for every (probe, subspace): squared L2 between the
/// residual projection and the entry, or their dot product.
struct DenseLut {
    std::size_t nprobs = 0;
    std::size_t n_sub = 0;
    std::size_t entries = 0;
    std::vector<double> values; // nprobs x n_sub x entries
    const double* table(std::size_t probe) const {
        return values.data() + probe * n_sub * entries;
    }
    double at(std::size_t probe, std::size_t s, std::size_t e) const {
        return values[(probe * n_sub + s) * entries + e];
    }
};

/// `residuals` holds one padded residual (query - centroid) per probe.
DenseLut dense_lut(std::span<const double> residuals, std::size_t nprobs,
                   const Codebook& codebook, Metric metric);

struct RankedList {
    std::vector<idx_t> ids;
    std::vector<double> scores;
};

/// Dense-LUT IVFPQ: every member of the nprobs closest clusters is scored by
/// summing its encoded entries' values (plus q.c for inner product).
std::vector<RankedList> ivfpq_reference_search(const Dataset& queries, const Index& index,
                                               std::size_t nprobs, std::size_t k);

} // namespace raylut
