#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "raylut/dataset.h"

namespace raylut {

/// Coarse quantizer: C centroids over the full (padded) dimension.
struct IvfModel {
    std::size_t c = 0;
    std::size_t d = 0;
    std::vector<float> centroids; // c x d
    std::vector<std::int32_t> labels;
    std::vector<double> sq_norms; // |centroid|^2, same kernel as the filter dot

    std::span<const float> centroid(std::size_t j) const {
        return {centroids.data() + j * d, d};
    }
};

/// Per-subspace codebooks; subspace s covers columns [2s, 2s+2).
struct Codebook {
    std::size_t n_sub = 0;
    std::size_t m = 2;
    std::size_t e = 0;
    std::vector<double> entries; // n_sub x e x m, interleaved
    std::vector<double> ex, ey;  // n_sub x e, structure-of-arrays copies

    Codebook() = default;
    Codebook(std::size_t n_sub, std::size_t e, std::vector<double> entries);

    std::pair<double, double> entry(std::size_t s, std::size_t k) const {
        return {ex[s * e + k], ey[s * e + k]};
    }
    const double* xs(std::size_t s) const { return ex.data() + s * e; }
    const double* ys(std::size_t s) const { return ey.data() + s * e; }
};

/// Points of each cluster split by (subspace, entry). Lists hold global point
/// ids in ascending order.
class InvertedMap {
   public:
    InvertedMap() = default;
    InvertedMap(std::size_t c, std::size_t n_sub, std::size_t e,
                std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> ids);

    std::size_t clusters() const { return c_; }
    std::size_t subspaces() const { return n_sub_; }
    std::size_t entries() const { return e_; }

    std::span<const std::uint32_t> list(std::size_t c, std::size_t s, std::size_t e) const {
        const std::size_t k = (c * n_sub_ + s) * e_ + e;
        return {ids_.data() + offsets_[k], ids_.data() + offsets_[k + 1]};
    }

    const std::vector<std::uint64_t>& offsets() const { return offsets_; }
    const std::vector<std::uint32_t>& ids() const { return ids_; }

   private:
    std::size_t c_ = 0, n_sub_ = 0, e_ = 0;
    std::vector<std::uint64_t> offsets_; // c*n_sub*e + 1
    std::vector<std::uint32_t> ids_;
};

inline constexpr std::size_t kSubspaceDim = 2;
inline constexpr std::size_t kDefaultKMeansIters = 25;

/// Dimension after zero-padding to a multiple of the subspace width.
inline std::size_t padded_dim(std::size_t d) {
    return (d + kSubspaceDim - 1) / kSubspaceDim * kSubspaceDim;
}

IvfModel train_ivf(const Dataset& points, std::size_t c, std::size_t max_iters,
                   std::uint64_t seed);

/// Fills sq_norms from centroids.
void finalize_ivf(IvfModel& ivf);

/// Row i = points[i] - centroids[labels[i]], in double (n x d).
std::vector<double> compute_residuals(const Dataset& points, const IvfModel& ivf);

Codebook train_codebooks(std::span<const double> residuals, std::size_t d, std::size_t m,
                         std::size_t e, std::uint64_t seed,
                         std::size_t max_iters = kDefaultKMeansIters);

/// Nearest entry by squared L2; ties go to the lowest entry id.
std::uint32_t assign_entry(double x, double y, const Codebook& codebook, std::size_t s);

/// n x n_sub entry ids.
std::vector<std::uint16_t> encode(std::span<const double> residuals, const Codebook& codebook);

InvertedMap build_inverted_map(std::span<const std::uint16_t> codes, const IvfModel& ivf,
                               const Codebook& codebook);
InvertedMap build_inverted_map(std::span<const double> residuals, const IvfModel& ivf,
                               const Codebook& codebook);

} // namespace raylut
