#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "raylut/common.h"
#include "raylut/trainer.h"

namespace raylut {

struct Sphere {
    double cx, cy, cz, r;
    std::uint32_t s; // subspace
    std::uint32_t e; // codebook entry
};

/// Per-subspace layout constants. base_radius is R_s, standoff is L_s (ray
/// origin sits standoff below the center plane), depth is z_s.
struct SubspaceGeometry {
    double base_radius = 0.0;
    double standoff = 0.0;
    double depth = 0.0;
    double max_radius = 0.0;
};

/// One sphere per codebook entry; sphere index = s * entries + e.
struct SphereScene {
    Metric metric = Metric::L2;
    std::size_t n_sub = 0;
    std::size_t entries = 0;
    std::vector<Sphere> spheres;
    std::vector<SubspaceGeometry> sub;

    const Sphere& sphere(std::size_t s, std::size_t e) const { return spheres[s * entries + e]; }
};

/// A +z ray. The origin sits at depth z_s - L_s; t_max bounds the travel time.
struct Ray {
    double ox = 0.0, oy = 0.0, oz = 0.0;
    double t_max = 0.0;
    std::uint32_t query = 0;
    std::uint32_t s = 0;
    std::uint32_t c = 0; // probed cluster
};

inline constexpr double kRadiusMargin = 1.25;

/// L2: every sphere in subspace s has radius R_s = 1.25 * thresholds_max[s]
/// and L_s = R_s. Inner product: radius sqrt(R_s^2 + x_e^2 + y_e^2) and L_s is
/// the largest radius in the subspace.
SphereScene build_scene(const Codebook& codebook, Metric metric,
                        std::span<const double> thresholds_max);

/// Lateral distance implied by an entry time: sqrt(R^2 - (L - t_hit)^2).
double t_hit_to_l2(double t_hit, double radius, double standoff);

/// Maximum travel time that restricts hits to lateral distance
/// min(threshold * scale, R).
double threshold_to_tmax(double threshold, double scale, double radius, double standoff);

/// Effective pruning radius min(threshold * scale, R); an infinite scale
/// always yields R.
double effective_radius(double threshold, double scale, double radius);

/// Inner product of entry and query projection from the entry time into a
/// sphere placed with the inner-product radius transform.
double t_hit_to_ip(double t_hit, double q_norm2, double radius, double standoff);

/// Travel time keeping only hits whose inner product is >= ip_floor.
double ip_floor_to_tmax(double ip_floor, double q_norm2, double radius, double standoff);

/// One ray per (probe, subspace), probe-major. `thresholds` holds either one
/// value per subspace or one per (probe, subspace). For inner product the
/// travel time comes from ip_floor when given, otherwise it is L_s.
std::vector<Ray> make_rays(std::span<const float> query,
                           std::span<const std::uint32_t> probe_clusters, const IvfModel& ivf,
                           std::span<const double> thresholds, double scale,
                           const SphereScene& scene, std::uint32_t query_id = 0,
                           std::optional<double> ip_floor = std::nullopt);

} // namespace raylut
