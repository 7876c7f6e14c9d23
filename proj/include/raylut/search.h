#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "raylut/index.h"
#include "raylut/topk.h"

namespace raylut {

enum class SearchMode {
    Exact,           // H: accumulate LUT values over hit lists
    HitCountPenalty, // M: +1 inner hit, 0 outer-only, -1 miss
    HitCount,        // L: +1 per hit subspace
};

SearchMode parse_mode(std::string_view s);
std::string_view mode_name(SearchMode m);

struct SearchParams {
    std::size_t nprobs = 1;
    std::size_t k = 10;
    double thres_scale = 1.0; // +inf disables pruning
    SearchMode mode = SearchMode::Exact;
    std::optional<double> ip_floor;
    bool rerank = false; // mode M only: rescore the top 4k exactly
    int threads = 0;     // 0 = OpenMP default
};

struct Probe {
    std::uint32_t cluster = 0;
    double coarse = 0.0;           // L2: squared distance, IP: q.c
    std::vector<double> residual; // padded query - centroid
};

/// The nprobs best clusters (L2 ascending / IP descending, ties by id).
std::vector<Probe> filter_clusters(std::span<const float> query, const IvfModel& ivf,
                                   Metric metric, std::size_t nprobs);

struct LutItem {
    std::uint32_t entry;
    double value; // L2: lateral distance, IP: similarity
    double t_hit;
    bool inner; // inside half the effective reach
};

/// Hit lists per (probe, subspace), each sorted by entry id.
struct L2Lut {
    std::size_t nprobs = 0;
    std::size_t n_sub = 0;
    std::vector<std::uint32_t> offsets; // nprobs * n_sub + 1
    std::vector<LutItem> items;
    std::vector<double> r_eff;     // nprobs x n_sub; 0 means the ray was skipped
    std::vector<double> threshold; // nprobs x n_sub, model prediction
    std::span<const LutItem> list(std::size_t probe, std::size_t s) const {
        const std::size_t k = probe * n_sub + s;
        return {items.data() + offsets[k], items.data() + offsets[k + 1]};
    }
    std::size_t size() const { return items.size(); }
};

struct OpCounts {
    std::uint64_t sphere_tests = 0;
    std::uint64_t lut_values = 0;
    std::uint64_t accumulations = 0;
    std::uint64_t nodes_visited = 0;
};

struct Timings {
    std::uint64_t filter_ns = 0;
    std::uint64_t lut_ns = 0;
    std::uint64_t distcalc_ns = 0;
};

struct QueryResult {
    std::vector<idx_t> ids;
    std::vector<double> scores;
    bool underfull = false;
    Timings timings;
    OpCounts ops;
};

using Candidate = std::pair<idx_t, double>;

/// Per-thread working memory, reused across queries.
class SearchScratch {
   public:
    explicit SearchScratch(std::size_t n = 0) { reset(n); }
    void reset(std::size_t n);
    /// Starts a new candidate set.
    void next_epoch();
    bool seen(std::uint32_t p) const { return stamp_[p] == epoch_; }
    void touch(std::uint32_t p, double init, double init_aux = 0.0);

    std::vector<double> score;
    std::vector<double> aux;
    std::vector<std::uint32_t> touched;
    std::vector<Hit> hits;

   private:
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
};

/// `query` must already be padded to index.d.
L2Lut build_selective_lut(std::span<const float> query, std::span<const Probe> probes,
                          const Index& index, const SearchParams& params,
                          SearchScratch& scratch, OpCounts* ops = nullptr);

/// Mode H scoring over the points named by the hit lists. L2 adds r_eff^2 for
/// each subspace without a hit; inner product adds q.c and nothing for misses.
std::vector<Candidate> accumulate_exact(const L2Lut& lut, std::span<const Probe> probes,
                                        const Index& index, SearchScratch& scratch,
                                        OpCounts* ops = nullptr);

/// Modes L and M over every member of the probed clusters.
std::vector<Candidate> score_hitcount(const L2Lut& lut, std::span<const Probe> probes,
                                      const Index& index, SearchMode mode,
                                      SearchScratch& scratch, OpCounts* ops = nullptr);

/// Mode H score for the given points, each of which must belong to a probed
/// cluster.
std::vector<Candidate> rescore_exact(std::span<const idx_t> ids, const L2Lut& lut,
                                     std::span<const Probe> probes, const Index& index,
                                     OpCounts* ops = nullptr);

/// k best by score, ties by ascending id; underfull when fewer than k.
QueryResult select_topk(std::span<const Candidate> scores, std::size_t k, Order order);

QueryResult search_one(std::span<const float> query, const Index& index,
                       const SearchParams& params, SearchScratch& scratch);

/// Queries are padded to the index dimension and must carry its metric.
std::vector<QueryResult> search_batch(const Dataset& queries, const Index& index,
                                      const SearchParams& params);

} // namespace raylut
