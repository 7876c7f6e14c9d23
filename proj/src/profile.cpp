#include "raylut/profile.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "raylut/search.h"

namespace raylut {

namespace {


void check_inputs(const Index& index, const Dataset& queries, const NeighborTable& gt,
                  std::size_t top) {
    if (gt.q_count != queries.n())
        throw std::invalid_argument("profile: ground truth and query counts differ");
    if (top == 0 || gt.k < top)
        throw std::invalid_argument("profile: ground truth has fewer columns than requested");
    for (auto id : gt.ids)
        if (id < 0 || static_cast<std::size_t>(id) >= index.n)
            throw std::invalid_argument("profile: ground-truth id out of range");
}

/// Entry ids of subspace s sorted by distance to (rx, ry), ties by id.
std::vector<std::uint32_t> ranked_entries(const Codebook& cb, std::size_t s, double rx,
                                          double ry) {
    std::vector<std::pair<double, std::uint32_t>> d(cb.e);
    for (std::size_t e = 0; e < cb.e; ++e) {
        const auto [x, y] = cb.entry(s, e);
        d[e] = {(x - rx) * (x - rx) + (y - ry) * (y - ry), static_cast<std::uint32_t>(e)};
    }
    std::sort(d.begin(), d.end());
    std::vector<std::uint32_t> rank_of(cb.e);
    for (std::size_t r = 0; r < d.size(); ++r) rank_of[d[r].second] = static_cast<std::uint32_t>(r);
    return rank_of;
}

} // namespace

EntryUsage profile_entry_usage(const Index& index, const Dataset& queries,
                               const NeighborTable& gt, std::size_t top) {
    check_inputs(index, queries, gt, top);
    const Dataset q = index.prepare_queries(queries);
    const std::size_t n_sub = index.n_sub(), e_count = index.entries();
    EntryUsage u;
    u.n_sub = n_sub;
    u.entries = e_count;
    u.mean_ratio.assign(n_sub, 0.0);
    u.max_ratio.assign(n_sub, 0.0);
    u.frequency.assign(n_sub * e_count, 0);
    if (q.n() == 0) return u;
    std::vector<char> used(e_count);
    for (std::size_t qi = 0; qi < q.n(); ++qi) {
        const auto probe = filter_clusters(q.row(qi), index.ivf, index.metric, 1).front();
        const auto ids = gt.row_ids(qi).subspan(0, top);
        for (std::size_t s = 0; s < n_sub; ++s) {
            std::fill(used.begin(), used.end(), 0);
            for (auto id : ids) used[index.codes[static_cast<std::size_t>(id) * n_sub + s]] = 1;
            const auto n_used = static_cast<double>(std::count(used.begin(), used.end(), 1));
            const double ratio = n_used / static_cast<double>(e_count);
            u.mean_ratio[s] += ratio;
            u.max_ratio[s] = std::max(u.max_ratio[s], ratio);
            const auto rank_of =
                    ranked_entries(index.codebook, s, probe.residual[2 * s], probe.residual[2 * s + 1]);
            for (std::size_t e = 0; e < e_count; ++e)
                if (used[e]) ++u.frequency[s * e_count + rank_of[e]];
        }
    }
    for (auto& m : u.mean_ratio) m /= static_cast<double>(q.n());
    return u;
}

std::vector<double> locality_cdf(std::span<const std::uint32_t> ranks, std::size_t entries) {
    std::vector<double> cdf(entries, 0.0);
    if (ranks.empty()) return cdf;
    std::vector<std::size_t> hist(entries, 0);
    for (auto r : ranks) {
        if (r >= entries) throw std::invalid_argument("locality_cdf: rank out of range");
        ++hist[r];
    }
    std::size_t run = 0;
    for (std::size_t r = 0; r < entries; ++r) {
        run += hist[r];
        cdf[r] = static_cast<double>(run) / static_cast<double>(ranks.size());
    }
    return cdf;
}

LocalityProfile profile_locality_cdf(const Index& index, const Dataset& queries,
                                     const NeighborTable& gt, std::size_t top) {
    check_inputs(index, queries, gt, top);
    const Dataset q = index.prepare_queries(queries);
    const std::size_t n_sub = index.n_sub(), e_count = index.entries();
    LocalityProfile lp;
    lp.n_sub = n_sub;
    lp.entries = e_count;
    lp.cdf.assign(n_sub * e_count, 0.0);
    lp.mean_cdf.assign(e_count, 0.0);
    if (q.n() == 0) return lp;
    std::vector<std::uint32_t> ranks(top);
    for (std::size_t qi = 0; qi < q.n(); ++qi) {
        const auto probe = filter_clusters(q.row(qi), index.ivf, index.metric, 1).front();
        const auto ids = gt.row_ids(qi).subspan(0, top);
        for (std::size_t s = 0; s < n_sub; ++s) {
            const auto rank_of =
                    ranked_entries(index.codebook, s, probe.residual[2 * s], probe.residual[2 * s + 1]);
            for (std::size_t j = 0; j < top; ++j)
                ranks[j] = rank_of[index.codes[static_cast<std::size_t>(ids[j]) * n_sub + s]];
            const auto cdf = locality_cdf(ranks, e_count);
            for (std::size_t r = 0; r < e_count; ++r) lp.cdf[s * e_count + r] += cdf[r];
        }
    }
    for (auto& v : lp.cdf) v /= static_cast<double>(q.n());
    for (std::size_t s = 0; s < n_sub; ++s)
        for (std::size_t r = 0; r < e_count; ++r)
            lp.mean_cdf[r] += lp.cdf[s * e_count + r] / static_cast<double>(n_sub);
    return lp;
}

} // namespace raylut
