#include "raylut/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace raylut {

namespace {

void check_rows(const IdRows& results, const NeighborTable& gt) {
    if (results.size() != gt.q_count)
        throw std::invalid_argument("recall: result and ground-truth query counts differ");
}

} // namespace

double recall_1_at_k(const IdRows& results, const NeighborTable& gt, std::size_t k) {
    check_rows(results, gt);
    if (gt.k < 1) throw std::invalid_argument("recall_1_at_k: ground truth has no columns");
    if (results.empty()) return 0.0;
    std::size_t found = 0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const idx_t nn = gt.row_ids(q)[0];
        const auto& row = results[q];
        const auto end = row.begin() + static_cast<std::ptrdiff_t>(std::min(k, row.size()));
        if (std::find(row.begin(), end, nn) != end) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(results.size());
}

double recall_a_at_b(const IdRows& results, const NeighborTable& gt, std::size_t a,
                     std::size_t b) {
    check_rows(results, gt);
    if (a == 0 || gt.k < a)
        throw std::invalid_argument("recall_a_at_b: ground truth needs at least a columns");
    if (results.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto truth = gt.row_ids(q).subspan(0, a);
        const std::unordered_set<idx_t> want(truth.begin(), truth.end());
        const auto& row = results[q];
        std::unordered_set<idx_t> got;
        for (std::size_t j = 0; j < std::min(b, row.size()); ++j)
            if (want.count(row[j])) got.insert(row[j]);
        total += static_cast<double>(got.size()) / static_cast<double>(a);
    }
    return total / static_cast<double>(results.size());
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    if (xs.size() < 2) return 0.0;
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace raylut
