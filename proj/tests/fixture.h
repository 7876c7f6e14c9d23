#pragma once
// Shared seeded benchmark: 20k clustered points in 32-D, 64 blobs.

#include "raylut/index.h"
#include "raylut/reference.h"
#include "raylut/search.h"

namespace raylut::testing {

inline constexpr std::uint64_t kBenchSeed = 1;
inline constexpr std::uint64_t kBenchQuerySeed = 7;

struct Benchmark {
    Dataset base;
    Dataset queries;
    Index index;
    NeighborTable gt; // top-100
};

inline const Benchmark& benchmark(std::size_t n = 20000, std::size_t n_queries = 200) {
    static Benchmark b = [&] {
        Benchmark out;
        out.base = gen_synthetic(n, 32, 64, 0.05, kBenchSeed);
        out.queries = gen_synthetic_queries(n_queries, 32, 64, 0.05, kBenchSeed, kBenchQuerySeed);
        IndexBuildOptions opts;
        opts.clusters = 64;
        opts.entries = 64;
        opts.seed = kBenchSeed;
        out.index = build_index(out.base, opts);
        out.gt = brute_force_topk(out.base, out.queries, Metric::L2, 100);
        return out;
    }();
    return b;
}

inline std::vector<std::vector<idx_t>> id_rows(const std::vector<QueryResult>& res) {
    std::vector<std::vector<idx_t>> rows;
    for (const auto& r : res) rows.push_back(r.ids);
    return rows;
}

} // namespace raylut::testing
