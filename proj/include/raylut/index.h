#pragma once

#include <filesystem>

#include "raylut/bvh.h"
#include "raylut/scene.h"
#include "raylut/threshold.h"
#include "raylut/trainer.h"

namespace raylut {

struct IndexBuildOptions {
    std::size_t clusters = 64;
    std::size_t entries = 64;
    std::uint64_t seed = 1;
    std::size_t kmeans_iters = kDefaultKMeansIters;
    std::size_t threshold_samples = 500;
    std::size_t poly_degree = kDefaultPolyDegree;
    std::size_t leaf_size = kDefaultLeafSize;
};

/// Everything produced offline: coarse clusters, codebooks, the entry-to-point
/// map, the threshold model and the sphere scene with its BVH.
struct Index {
    Metric metric = Metric::L2;
    std::size_t n = 0;
    std::size_t d_orig = 0;
    std::size_t d = 0; // padded
    IvfModel ivf;
    Codebook codebook;
    InvertedMap inv;
    ThresholdModel thresholds;
    SphereScene scene;
    Bvh bvh;

    // derived on build/load
    std::vector<std::uint16_t> codes;                      // n x n_sub
    std::vector<std::vector<std::uint32_t>> members;       // per cluster, ascending
    std::vector<std::vector<std::uint16_t>> cluster_codes; // per cluster, members x n_sub

    std::size_t n_sub() const { return codebook.n_sub; }
    std::size_t entries() const { return codebook.e; }

    /// Validates dimension and pads to d.
    Dataset prepare_queries(const Dataset& queries) const;
};

Index build_index(const Dataset& base, const IndexBuildOptions& opts);

/// Binary bundle: magic "RLUT1", little-endian counts (N, D, C, E, n_sub),
/// then the trained arrays. The scene and BVH are rebuilt on load and checked
/// against the stored scene constants.
void save_index(const Index& index, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

/// Recomputes codes, members and cluster_codes from ivf.labels and inv.
void derive_layout(Index& index);

} // namespace raylut
