#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "raylut/common.h"

namespace raylut {

enum class VecsElem { Float32, UInt8, Int32 };

/// Row-major n x d matrix of finite float coordinates with a declared metric.
class Dataset {
   public:
    Dataset() = default;
    Dataset(std::size_t n, std::size_t d, std::vector<float> data,
            Metric metric = Metric::L2);

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    Metric metric() const { return metric_; }
    void set_metric(Metric m) { metric_ = m; }

    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * d_, d_};
    }
    std::span<const float> data() const { return data_; }

    /// Copy with zero columns appended up to `d`.
    Dataset padded_to(std::size_t d) const;

    bool operator==(const Dataset&) const = default;

   private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> data_;
    Metric metric_ = Metric::L2;
};

/// Ground truth or search output: q_count rows of k (id, score) pairs.
struct NeighborTable {
    std::size_t q_count = 0;
    std::size_t k = 0;
    std::vector<idx_t> ids;
    std::vector<float> scores;

    std::span<const idx_t> row_ids(std::size_t q) const {
        return {ids.data() + q * k, k};
    }
    std::span<const float> row_scores(std::size_t q) const {
        return {scores.data() + q * k, k};
    }
};

Dataset read_vecs(const std::filesystem::path& path, VecsElem elem);
void write_vecs(const std::filesystem::path& path, const Dataset& ds, VecsElem elem);

/// Picks the element kind from the extension (.fvecs, .bvecs, .ivecs).
VecsElem elem_from_extension(const std::filesystem::path& path);

/// ids -> ivecs, scores -> fvecs.
void write_neighbor_table(const std::filesystem::path& ids_path,
                          const std::filesystem::path& scores_path,
                          const NeighborTable& table);
NeighborTable read_neighbor_table(const std::filesystem::path& ids_path);
/// gt.ivecs -> gt.fvecs; anything else gets ".fvecs" appended.
std::filesystem::path companion_scores_path(const std::filesystem::path& ids_path);

/// Gaussian blobs with centers uniform in [0,1]^d; point i belongs to blob
/// i % n_clusters.
Dataset gen_synthetic(std::size_t n, std::size_t d, std::size_t n_clusters,
                      double spread, std::uint64_t seed);

/// Fresh draws from the same blobs as gen_synthetic(.., seed), using an
/// independent stream keyed by query_seed.
Dataset gen_synthetic_queries(std::size_t n, std::size_t d, std::size_t n_clusters,
                              double spread, std::uint64_t seed,
                              std::uint64_t query_seed);

} // namespace raylut
