#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace raylut {

struct KMeansResult {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids; // k x dim
    std::vector<std::int32_t> labels;
    /// Within-cluster SSE after every assignment step, in order.
    std::vector<double> sse_history;
    std::size_t iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or max_iters is reached. Empty clusters take the point farthest
/// from its centroid in the most populous cluster. Assignment ties go to the
/// lowest centroid id.
KMeansResult lloyd_kmeans(std::span<const double> points, std::size_t dim, std::size_t k,
                          std::size_t max_iters, std::uint64_t seed);

} // namespace raylut
