#include <cstdlib>
#include <string>

#include "raylut/kernels.h"

namespace raylut::kernels {

#if defined(RAYLUT_HAVE_AVX2)
namespace avx2_impl {
double dot_f32(const float*, const float*, std::size_t);
double l2sq_f32(const float*, const float*, std::size_t);
void dense_lut_l2(double, double, const double*, const double*, std::size_t, double*);
void dense_lut_ip(double, double, const double*, const double*, std::size_t, double*);
void pq_scan(const double*, std::size_t, const std::uint16_t*, std::size_t, std::size_t,
             double*);
std::size_t sphere_entry(double, double, double, double, const double*, const double*,
                         const double*, const double*, std::size_t, std::uint32_t*, double*);
} // namespace avx2_impl
#endif

const KernelTable* avx2() {
#if defined(RAYLUT_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    static const KernelTable table{"avx2",
                                   avx2_impl::dot_f32,
                                   avx2_impl::l2sq_f32,
                                   avx2_impl::dense_lut_l2,
                                   avx2_impl::dense_lut_ip,
                                   avx2_impl::pq_scan,
                                   avx2_impl::sphere_entry};
    return supported ? &table : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable*& current() {
    static const KernelTable* selected = [] {
        const char* env = std::getenv("RAYLUT_SIMD");
        if (env && std::string(env) == "scalar") return &scalar();
        const KernelTable* v = avx2();
        return v ? v : &scalar();
    }();
    return selected;
}

} // namespace

const KernelTable& active() {
    return *current();
}

bool select(std::string_view name) {
    if (name == "scalar") {
        current() = &scalar();
        return true;
    }
    if (name == "avx2" && avx2()) {
        current() = avx2();
        return true;
    }
    return false;
}

} // namespace raylut::kernels
