#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, where the
// CPU supports it, an AVX2 variant; active() picks one at startup.
//
// sphere_entry, dense_lut_* and pq_scan are bit-exact across variants (no FMA
// contraction, same operation order per lane). dot/l2sq reassociate the sum
// and agree with the reference only to rounding.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace raylut::kernels {

struct KernelTable {
    std::string_view name;

    /// Sum of x[i]*y[i], accumulated in double.
    double (*dot_f32)(const float* x, const float* y, std::size_t n);
    /// Sum of (x[i]-y[i])^2, accumulated in double.
    double (*l2sq_f32)(const float* x, const float* y, std::size_t n);

    /// out[e] = (rx-ex[e])^2 + (ry-ey[e])^2
    void (*dense_lut_l2)(double rx, double ry, const double* ex, const double* ey,
                         std::size_t n, double* out);
    /// out[e] = rx*ex[e] + ry*ey[e]
    void (*dense_lut_ip)(double rx, double ry, const double* ex, const double* ey,
                         std::size_t n, double* out);

    /// out[p] = sum over s (ascending) of lut[s*n_entries + codes[p*n_sub + s]].
    void (*pq_scan)(const double* lut, std::size_t n_entries, const std::uint16_t* codes,
                    std::size_t n_sub, std::size_t n, double* out);

    /// Tests a +z ray against n spheres (SoA). Writes the local index and entry
    /// time of every hit; returns the hit count.
    std::size_t (*sphere_entry)(double ox, double oy, double oz, double t_max,
                                const double* cx, const double* cy, const double* cz,
                                const double* r2, std::size_t n, std::uint32_t* hit_idx,
                                double* hit_t);
};

const KernelTable& scalar();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();
/// Selected at first use: AVX2 when available unless RAYLUT_SIMD=scalar.
const KernelTable& active();
/// Override the selection ("scalar" or "avx2"); returns false if unavailable.
bool select(std::string_view name);

/// Entry time of a +z ray into one sphere, the single source of truth for the
/// hit rule: lateral distance strictly inside the radius, 0 <= t <= t_max.
inline bool sphere_entry_one(double ox, double oy, double oz, double t_max, double cx,
                             double cy, double cz, double r2, double& t) {
    const double dx = cx - ox;
    const double dy = cy - oy;
    const double d2 = dx * dx + dy * dy;
    if (!(d2 < r2)) return false;
    t = (cz - oz) - std::sqrt(r2 - d2);
    return t >= 0.0 && t <= t_max;
}

} // namespace raylut::kernels
