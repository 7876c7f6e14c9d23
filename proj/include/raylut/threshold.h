#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "raylut/dataset.h"
#include "raylut/trainer.h"

namespace raylut {

inline constexpr std::size_t kDensityGrid = 100;
inline constexpr std::size_t kThresholdTopK = 100;

/// Point density over a grid x grid partition of one subspace's residual
/// projections. density = count / cell_area.
struct DensityMap {
    std::size_t grid = kDensityGrid;
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    std::vector<std::uint32_t> counts; // row-major [ix * grid + iy]
    std::vector<double> density;

    double cell_w() const { return (max_x - min_x) / static_cast<double>(grid); }
    double cell_h() const { return (max_y - min_y) / static_cast<double>(grid); }
    /// Containing cell, clamped to the border for points outside the box.
    std::pair<std::size_t, std::size_t> cell(double x, double y) const;
};

DensityMap build_density_map(std::span<const double> residuals, std::size_t d, std::size_t s,
                             std::size_t grid = kDensityGrid);

double density_at(const DensityMap& map, double x, double y);

/// Polynomial in the standardized variable (x - x_shift) / x_scale; outputs
/// are clamped to [t_min, t_max].
struct PolyModel {
    std::size_t degree = 0;
    std::vector<double> coefficients; // standardized basis, lowest order first
    double x_shift = 0.0;
    double x_scale = 1.0;
    double t_min = 0.0;
    double t_max = 0.0;

    /// Coefficients of the same polynomial in the raw variable x.
    std::vector<double> raw_coefficients() const;
};

inline constexpr std::size_t kDefaultPolyDegree = 3;
inline constexpr double kRidge = 1e-9;

/// Least squares via the ridge-regularized normal equations.
PolyModel fit_poly(std::span<const double> xs, std::span<const double> ys, std::size_t degree);

double predict_threshold(const PolyModel& model, double density);

/// For a pseudo-query: per subspace, the lateral distances from its
/// projection to those of its full-dimension top-k neighbors.
struct PseudoQueryProfile {
    std::uint32_t id = 0;
    std::vector<double> density;   // n_sub, at the pseudo-query's residual
    std::vector<double> threshold; // n_sub, max of the distances
    std::vector<double> distances; // n_sub x top_k
};

/// Profiles for `ids`. Neighbors are exact (brute force) and exclude the
/// point itself. Lateral distance in subspace s is measured between residual
/// projections taken w.r.t. the neighbor's own cluster, which is the frame
/// its codebook entry and the corresponding probe ray live in.
std::vector<PseudoQueryProfile> profile_pseudo_queries(const Dataset& base, const IvfModel& ivf,
                                                       std::span<const double> residuals,
                                                       const std::vector<DensityMap>& maps,
                                                       std::span<const std::uint32_t> ids,
                                                       std::size_t top_k = kThresholdTopK);

struct TrainingPairs {
    std::vector<std::uint32_t> sample_ids;
    std::vector<std::vector<double>> densities;  // per subspace
    std::vector<std::vector<double>> thresholds; // per subspace
};

/// Seeded sample without replacement; ids sorted ascending.
std::vector<std::uint32_t> sample_ids(std::size_t n, std::size_t sample_n, std::uint64_t seed,
                                      std::span<const std::uint32_t> exclude = {});

TrainingPairs sample_training_pairs(const Dataset& base, const IvfModel& ivf,
                                    std::span<const double> residuals,
                                    const std::vector<DensityMap>& maps, std::size_t sample_n,
                                    std::uint64_t seed);

/// Everything the search needs to turn a query projection into a threshold.
struct ThresholdModel {
    std::vector<DensityMap> maps;       // per subspace
    std::vector<PolyModel> polys;       // per subspace
    std::vector<double> thresholds_max; // per subspace, largest trained threshold

    double predict(std::size_t s, double x, double y) const {
        return predict_threshold(polys[s], density_at(maps[s], x, y));
    }
};

struct ThresholdTrainOptions {
    std::size_t sample_n = 500;
    std::size_t degree = kDefaultPolyDegree;
    std::uint64_t seed = 1;
};

ThresholdModel train_threshold_model(const Dataset& base, const IvfModel& ivf,
                                     std::span<const double> residuals,
                                     const ThresholdTrainOptions& opts,
                                     TrainingPairs* pairs_out = nullptr);

/// Mean over profiles and subspaces of the fraction of top-k neighbor
/// projections strictly inside predicted_threshold * scale.
double retention_at_scale(const ThresholdModel& model,
                          std::span<const PseudoQueryProfile> profiles, double scale);

} // namespace raylut
