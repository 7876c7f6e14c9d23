#include "raylut/scene.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace raylut {

SphereScene build_scene(const Codebook& cb, Metric metric,
                        std::span<const double> thresholds_max) {
    if (thresholds_max.size() != cb.n_sub)
        throw std::invalid_argument("build_scene: one threshold per subspace required");
    SphereScene scene;
    scene.metric = metric;
    scene.n_sub = cb.n_sub;
    scene.entries = cb.e;
    scene.sub.resize(cb.n_sub);
    scene.spheres.reserve(cb.n_sub * cb.e);

    for (std::size_t s = 0; s < cb.n_sub; ++s) {
        const double t = thresholds_max[s];
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("build_scene: thresholds must be finite and positive");
        auto& g = scene.sub[s];
        g.base_radius = kRadiusMargin * t;
        if (metric == Metric::L2) {
            g.max_radius = g.base_radius;
        } else {
            g.max_radius = 0.0;
            for (std::size_t e = 0; e < cb.e; ++e) {
                const auto [x, y] = cb.entry(s, e);
                g.max_radius = std::max(g.max_radius,
                                        std::sqrt(g.base_radius * g.base_radius + x * x + y * y));
            }
        }
        g.standoff = g.max_radius;
    }

    // Each ray starts standoff below its center plane; consecutive planes are
    // spaced so no sphere can reach another subspace's ray segment.
    double z = scene.sub[0].standoff;
    for (std::size_t s = 0; s < cb.n_sub; ++s) {
        if (s > 0) z += 2.0 * (scene.sub[s - 1].max_radius + scene.sub[s].standoff);
        scene.sub[s].depth = z;
    }

    for (std::size_t s = 0; s < cb.n_sub; ++s) {
        const auto& g = scene.sub[s];
        for (std::size_t e = 0; e < cb.e; ++e) {
            const auto [x, y] = cb.entry(s, e);
            const double r = metric == Metric::L2
                                     ? g.base_radius
                                     : std::sqrt(g.base_radius * g.base_radius + x * x + y * y);
            scene.spheres.push_back({x, y, g.depth, r, static_cast<std::uint32_t>(s),
                                     static_cast<std::uint32_t>(e)});
        }
    }
    return scene;
}

double t_hit_to_l2(double t_hit, double radius, double standoff) {
    // entry times carry rounding from the depth subtraction
    const double slack = 1e-9 * std::max(1.0, standoff);
    if (!(t_hit >= standoff - radius - slack && t_hit <= standoff + slack))
        throw std::domain_error("t_hit outside [L - R, L]");
    const double h = standoff - t_hit;
    return std::sqrt(std::max(0.0, radius * radius - h * h));
}

double effective_radius(double threshold, double scale, double radius) {
    if (std::isinf(scale)) return radius;
    const double r = threshold * scale;
    if (std::isnan(r)) return radius;
    return std::clamp(r, 0.0, radius);
}

double threshold_to_tmax(double threshold, double scale, double radius, double standoff) {
    const double r = effective_radius(threshold, scale, radius);
    return std::clamp(standoff - std::sqrt(radius * radius - r * r), 0.0, standoff);
}

double t_hit_to_ip(double t_hit, double q_norm2, double radius, double standoff) {
    const double h = standoff - t_hit;
    const double v = (q_norm2 - radius * radius + h * h) / 2.0;
    // below the rounding error of the expression the sign carries no signal
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                         (q_norm2 + radius * radius + standoff * standoff);
    return std::abs(v) <= noise ? 0.0 : v;
}

double ip_floor_to_tmax(double ip_floor, double q_norm2, double radius, double standoff) {
    const double a = radius * radius - q_norm2 + 2.0 * ip_floor;
    return std::clamp(standoff - std::sqrt(std::max(0.0, a)), 0.0, standoff);
}

std::vector<Ray> make_rays(std::span<const float> query,
                           std::span<const std::uint32_t> probe_clusters, const IvfModel& ivf,
                           std::span<const double> thresholds, double scale,
                           const SphereScene& scene, std::uint32_t query_id,
                           std::optional<double> ip_floor) {
    if (query.size() != ivf.d || ivf.d != scene.n_sub * kSubspaceDim)
        throw std::invalid_argument("make_rays: dimension mismatch");
    const std::size_t n_sub = scene.n_sub;
    const bool per_probe = thresholds.size() == probe_clusters.size() * n_sub;
    if (scene.metric == Metric::L2 && !per_probe && thresholds.size() != n_sub)
        throw std::invalid_argument("make_rays: threshold count mismatch");

    std::vector<Ray> rays;
    rays.reserve(probe_clusters.size() * n_sub);
    for (std::size_t j = 0; j < probe_clusters.size(); ++j) {
        const std::uint32_t c = probe_clusters[j];
        if (c >= ivf.c) throw std::out_of_range("make_rays: cluster id out of range");
        const auto cent = ivf.centroid(c);
        for (std::size_t s = 0; s < n_sub; ++s) {
            const auto& g = scene.sub[s];
            Ray r;
            r.ox = static_cast<double>(query[2 * s]) - static_cast<double>(cent[2 * s]);
            r.oy = static_cast<double>(query[2 * s + 1]) - static_cast<double>(cent[2 * s + 1]);
            r.oz = g.depth - g.standoff;
            if (scene.metric == Metric::L2) {
                const double thr = thresholds[per_probe ? j * n_sub + s : s];
                r.t_max = threshold_to_tmax(thr, scale, g.base_radius, g.standoff);
            } else if (ip_floor) {
                r.t_max = ip_floor_to_tmax(*ip_floor, r.ox * r.ox + r.oy * r.oy, g.base_radius,
                                           g.standoff);
            } else {
                r.t_max = g.standoff;
            }
            r.query = query_id;
            r.s = static_cast<std::uint32_t>(s);
            r.c = c;
            rays.push_back(r);
        }
    }
    return rays;
}

} // namespace raylut
