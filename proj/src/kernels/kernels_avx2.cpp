// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
// Keep this file free of inline library code that could be shared with
// baseline translation units.

#include <immintrin.h>

#include <cstddef>
#include <cstdint>

namespace raylut::kernels::avx2_impl {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

} // namespace

double dot_f32(const float* x, const float* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 yv = _mm256_loadu_ps(y + i);
        const __m256d xl = _mm256_cvtps_pd(_mm256_castps256_ps128(xv));
        const __m256d xh = _mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1));
        const __m256d yl = _mm256_cvtps_pd(_mm256_castps256_ps128(yv));
        const __m256d yh = _mm256_cvtps_pd(_mm256_extractf128_ps(yv, 1));
        a0 = _mm256_fmadd_pd(xl, yl, a0);
        a1 = _mm256_fmadd_pd(xh, yh, a1);
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return s;
}

double l2sq_f32(const float* x, const float* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 yv = _mm256_loadu_ps(y + i);
        const __m256d dl = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(xv)),
                                         _mm256_cvtps_pd(_mm256_castps256_ps128(yv)));
        const __m256d dh = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1)),
                                         _mm256_cvtps_pd(_mm256_extractf128_ps(yv, 1)));
        a0 = _mm256_fmadd_pd(dl, dl, a0);
        a1 = _mm256_fmadd_pd(dh, dh, a1);
    }
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        s += d * d;
    }
    return s;
}

void dense_lut_l2(double rx, double ry, const double* ex, const double* ey, std::size_t n,
                  double* out) {
    const __m256d vx = _mm256_set1_pd(rx);
    const __m256d vy = _mm256_set1_pd(ry);
    std::size_t e = 0;
    for (; e + 4 <= n; e += 4) {
        const __m256d dx = _mm256_sub_pd(vx, _mm256_loadu_pd(ex + e));
        const __m256d dy = _mm256_sub_pd(vy, _mm256_loadu_pd(ey + e));
        _mm256_storeu_pd(out + e,
                         _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
    }
    for (; e < n; ++e) {
        const double dx = rx - ex[e];
        const double dy = ry - ey[e];
        out[e] = dx * dx + dy * dy;
    }
}

void dense_lut_ip(double rx, double ry, const double* ex, const double* ey, std::size_t n,
                  double* out) {
    const __m256d vx = _mm256_set1_pd(rx);
    const __m256d vy = _mm256_set1_pd(ry);
    std::size_t e = 0;
    for (; e + 4 <= n; e += 4) {
        const __m256d px = _mm256_mul_pd(vx, _mm256_loadu_pd(ex + e));
        const __m256d py = _mm256_mul_pd(vy, _mm256_loadu_pd(ey + e));
        _mm256_storeu_pd(out + e, _mm256_add_pd(px, py));
    }
    for (; e < n; ++e) out[e] = rx * ex[e] + ry * ey[e];
}

void pq_scan(const double* lut, std::size_t n_entries, const std::uint16_t* codes,
             std::size_t n_sub, std::size_t n, double* out) {
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        const std::uint16_t* c0 = codes + p * n_sub;
        const std::uint16_t* c1 = c0 + n_sub;
        const std::uint16_t* c2 = c1 + n_sub;
        const std::uint16_t* c3 = c2 + n_sub;
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t s = 0; s < n_sub; ++s) {
            const int base = static_cast<int>(s * n_entries);
            const __m128i idx = _mm_setr_epi32(base + c0[s], base + c1[s], base + c2[s],
                                               base + c3[s]);
            acc = _mm256_add_pd(acc, _mm256_i32gather_pd(lut, idx, 8));
        }
        _mm256_storeu_pd(out + p, acc);
    }
    for (; p < n; ++p) {
        const std::uint16_t* c = codes + p * n_sub;
        double s = 0.0;
        for (std::size_t sub = 0; sub < n_sub; ++sub) s += lut[sub * n_entries + c[sub]];
        out[p] = s;
    }
}

std::size_t sphere_entry(double ox, double oy, double oz, double t_max, const double* cx,
                         const double* cy, const double* cz, const double* r2, std::size_t n,
                         std::uint32_t* hit_idx, double* hit_t) {
    const __m256d vox = _mm256_set1_pd(ox);
    const __m256d voy = _mm256_set1_pd(oy);
    const __m256d voz = _mm256_set1_pd(oz);
    const __m256d vtm = _mm256_set1_pd(t_max);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t hits = 0;
    std::size_t i = 0;
    alignas(32) double t4[4];
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(cx + i), vox);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(cy + i), voy);
        const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
        const __m256d rr = _mm256_loadu_pd(r2 + i);
        const __m256d inside = _mm256_cmp_pd(d2, rr, _CMP_LT_OQ);
        if (_mm256_movemask_pd(inside) == 0) continue;
        const __m256d t = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(cz + i), voz),
                                        _mm256_sqrt_pd(_mm256_sub_pd(rr, d2)));
        const __m256d ok = _mm256_and_pd(
                inside, _mm256_and_pd(_mm256_cmp_pd(t, zero, _CMP_GE_OQ),
                                      _mm256_cmp_pd(t, vtm, _CMP_LE_OQ)));
        int mask = _mm256_movemask_pd(ok);
        if (mask == 0) continue;
        _mm256_store_pd(t4, t);
        while (mask) {
            const int b = __builtin_ctz(static_cast<unsigned>(mask));
            hit_idx[hits] = static_cast<std::uint32_t>(i + b);
            hit_t[hits] = t4[b];
            ++hits;
            mask &= mask - 1;
        }
    }
    for (; i < n; ++i) {
        const double dx = cx[i] - ox;
        const double dy = cy[i] - oy;
        const double d2 = dx * dx + dy * dy;
        if (!(d2 < r2[i])) continue;
        const double t = (cz[i] - oz) - __builtin_sqrt(r2[i] - d2);
        if (t >= 0.0 && t <= t_max) {
            hit_idx[hits] = static_cast<std::uint32_t>(i);
            hit_t[hits] = t;
            ++hits;
        }
    }
    return hits;
}

} // namespace raylut::kernels::avx2_impl
