#include "raylut/kmeans.h"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace raylut {
namespace {

double sqdist(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

std::vector<double> plus_plus_init(std::span<const double> pts, std::size_t n,
                                   std::size_t dim, std::size_t k, std::mt19937_64& rng) {
    std::vector<double> cent(k * dim);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::size_t first = pick(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t idx = first;
        if (c > 0) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += best[i];
            if (total > 0.0) {
                const double target = unif(rng) * total;
                double acc = 0.0;
                idx = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (best[i] <= 0.0) continue;
                    acc += best[i];
                    idx = i;
                    if (acc > target) break;
                }
            } else {
                // every point coincides with a chosen center
                idx = 0;
                while (idx < n && chosen[idx]) ++idx;
                if (idx == n) idx = 0;
            }
        }
        chosen[idx] = 1;
        std::copy_n(pts.data() + idx * dim, dim, cent.data() + c * dim);
        const double* cc = cent.data() + c * dim;
        for (std::size_t i = 0; i < n; ++i)
            best[i] = std::min(best[i], sqdist(pts.data() + i * dim, cc, dim));
    }
    return cent;
}

double assign(std::span<const double> pts, std::size_t n, std::size_t dim,
              const std::vector<double>& cent, std::size_t k, std::vector<std::int32_t>& labels,
              std::vector<double>& dist) {
    double sse = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : sse)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* p = pts.data() + i * dim;
        double bd = std::numeric_limits<double>::infinity();
        std::int32_t bl = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = sqdist(p, cent.data() + c * dim, dim);
            if (d < bd) {
                bd = d;
                bl = static_cast<std::int32_t>(c);
            }
        }
        labels[i] = bl;
        dist[i] = bd;
        sse += bd;
    }
    return sse;
}

// Returns true if any label changed.
bool repair_empty(std::span<const double> pts, std::size_t n, std::size_t dim,
                  std::vector<double>& cent, std::size_t k, std::vector<std::int32_t>& labels) {
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
    bool changed = false;
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] != 0) continue;
        const auto donor = static_cast<std::size_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
        std::size_t far = n;
        double fd = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(labels[i]) != donor) continue;
            const double d = sqdist(pts.data() + i * dim, cent.data() + donor * dim, dim);
            if (d > fd) {
                fd = d;
                far = i;
            }
        }
        labels[far] = static_cast<std::int32_t>(j);
        --counts[donor];
        counts[j] = 1;
        std::copy_n(pts.data() + far * dim, dim, cent.data() + j * dim);
        changed = true;
    }
    return changed;
}

void update_means(std::span<const double> pts, std::size_t n, std::size_t dim,
                  std::vector<double>& cent, std::size_t k,
                  const std::vector<std::int32_t>& labels) {
    std::vector<double> sum(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++counts[c];
        for (std::size_t j = 0; j < dim; ++j) sum[c * dim + j] += pts[i * dim + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue; // keeps its old position until repaired
        for (std::size_t j = 0; j < dim; ++j)
            cent[c * dim + j] = sum[c * dim + j] / static_cast<double>(counts[c]);
    }
}

} // namespace

KMeansResult lloyd_kmeans(std::span<const double> points, std::size_t dim, std::size_t k,
                          std::size_t max_iters, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("kmeans: dim must be > 0");
    if (points.size() % dim != 0) throw std::invalid_argument("kmeans: ragged input");
    const std::size_t n = points.size() / dim;
    if (k == 0) throw std::invalid_argument("kmeans: k must be > 0");
    if (k > n) throw std::invalid_argument("kmeans: k > number of points");

    std::mt19937_64 rng(seed);
    KMeansResult r;
    r.k = k;
    r.dim = dim;
    r.centroids = plus_plus_init(points, n, dim, k, rng);
    r.labels.assign(n, 0);
    std::vector<double> dist(n);

    r.sse_history.push_back(assign(points, n, dim, r.centroids, k, r.labels, dist));
    std::vector<std::int32_t> next(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        ++r.iterations;
        update_means(points, n, dim, r.centroids, k, r.labels);
        repair_empty(points, n, dim, r.centroids, k, r.labels);
        // centroids now reflect `labels`; re-assign against them
        r.sse_history.push_back(assign(points, n, dim, r.centroids, k, next, dist));
        const bool same = next == r.labels;
        r.labels.swap(next);
        if (same) break;
    }
    if (repair_empty(points, n, dim, r.centroids, k, r.labels)) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sse += sqdist(points.data() + i * dim,
                          r.centroids.data() + static_cast<std::size_t>(r.labels[i]) * dim,
                          dim);
        r.sse_history.push_back(sse);
    }
    return r;
}

} // namespace raylut
