#include "raylut/kernels.h"

namespace raylut::kernels {
namespace {

double dot_f32(const float* x, const float* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return s;
}

double l2sq_f32(const float* x, const float* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        s += d * d;
    }
    return s;
}

void dense_lut_l2(double rx, double ry, const double* ex, const double* ey, std::size_t n,
                  double* out) {
    for (std::size_t e = 0; e < n; ++e) {
        const double dx = rx - ex[e];
        const double dy = ry - ey[e];
        out[e] = dx * dx + dy * dy;
    }
}

void dense_lut_ip(double rx, double ry, const double* ex, const double* ey, std::size_t n,
                  double* out) {
    for (std::size_t e = 0; e < n; ++e) out[e] = rx * ex[e] + ry * ey[e];
}

void pq_scan(const double* lut, std::size_t n_entries, const std::uint16_t* codes,
             std::size_t n_sub, std::size_t n, double* out) {
    for (std::size_t p = 0; p < n; ++p) {
        const std::uint16_t* c = codes + p * n_sub;
        double s = 0.0;
        for (std::size_t sub = 0; sub < n_sub; ++sub) s += lut[sub * n_entries + c[sub]];
        out[p] = s;
    }
}

std::size_t sphere_entry(double ox, double oy, double oz, double t_max, const double* cx,
                         const double* cy, const double* cz, const double* r2, std::size_t n,
                         std::uint32_t* hit_idx, double* hit_t) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double t;
        if (sphere_entry_one(ox, oy, oz, t_max, cx[i], cy[i], cz[i], r2[i], t)) {
            hit_idx[hits] = static_cast<std::uint32_t>(i);
            hit_t[hits] = t;
            ++hits;
        }
    }
    return hits;
}

} // namespace

const KernelTable& scalar() {
    static const KernelTable table{"scalar", dot_f32,  l2sq_f32,    dense_lut_l2,
                                   dense_lut_ip, pq_scan, sphere_entry};
    return table;
}

} // namespace raylut::kernels
