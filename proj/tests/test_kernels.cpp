#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "raylut/kernels.h"

using namespace raylut;

namespace {

std::vector<const kernels::KernelTable*> variants() {
    std::vector<const kernels::KernelTable*> v{&kernels::scalar()};
    if (kernels::avx2()) v.push_back(kernels::avx2());
    return v;
}

std::vector<double> randoms(std::size_t n, std::mt19937_64& rng, double lo = -2, double hi = 2) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("dot and l2sq agree with a long-double reference") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-3, 3);
    for (std::size_t n : {0, 1, 3, 7, 8, 9, 16, 31, 128, 1000}) {
        std::vector<float> x(n), y(n);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        long double dot = 0, l2 = 0, mag = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += static_cast<long double>(x[i]) * y[i];
            l2 += (static_cast<long double>(x[i]) - y[i]) * (static_cast<long double>(x[i]) - y[i]);
            mag += std::abs(static_cast<long double>(x[i]) * y[i]);
        }
        for (const auto* k : variants()) {
            CAPTURE(k->name);
            CAPTURE(n);
            CHECK(std::abs(k->dot_f32(x.data(), y.data(), n) - static_cast<double>(dot)) <=
                  1e-12 * (1.0 + static_cast<double>(mag)));
            CHECK(std::abs(k->l2sq_f32(x.data(), y.data(), n) - static_cast<double>(l2)) <=
                  1e-12 * (1.0 + static_cast<double>(l2)));
        }
    }
}

TEST_CASE("dense LUT kernels are bit-identical across variants") {
    std::mt19937_64 rng(2);
    for (std::size_t n : {1, 3, 4, 5, 64, 255, 256}) {
        const auto ex = randoms(n, rng), ey = randoms(n, rng);
        const double rx = 0.37, ry = -1.2;
        std::vector<double> ref_l2(n), ref_ip(n);
        kernels::scalar().dense_lut_l2(rx, ry, ex.data(), ey.data(), n, ref_l2.data());
        kernels::scalar().dense_lut_ip(rx, ry, ex.data(), ey.data(), n, ref_ip.data());
        for (std::size_t e = 0; e < n; ++e) {
            CHECK(ref_l2[e] == (rx - ex[e]) * (rx - ex[e]) + (ry - ey[e]) * (ry - ey[e]));
            CHECK(ref_ip[e] == rx * ex[e] + ry * ey[e]);
        }
        for (const auto* k : variants()) {
            std::vector<double> l2(n), ip(n);
            k->dense_lut_l2(rx, ry, ex.data(), ey.data(), n, l2.data());
            k->dense_lut_ip(rx, ry, ex.data(), ey.data(), n, ip.data());
            CHECK(same_bits(l2, ref_l2));
            CHECK(same_bits(ip, ref_ip));
        }
    }
}

TEST_CASE("pq_scan is bit-identical across variants") {
    std::mt19937_64 rng(3);
    for (std::size_t n_sub : {1, 2, 5, 16}) {
        for (std::size_t n : {0, 1, 3, 4, 13, 300}) {
            const std::size_t e = 37;
            const auto lut = randoms(n_sub * e, rng, 0, 10);
            std::vector<std::uint16_t> codes(n * n_sub);
            std::uniform_int_distribution<int> pick(0, static_cast<int>(e) - 1);
            for (auto& c : codes) c = static_cast<std::uint16_t>(pick(rng));
            std::vector<double> ref(n);
            for (std::size_t p = 0; p < n; ++p) {
                double s = 0.0;
                for (std::size_t sub = 0; sub < n_sub; ++sub) s += lut[sub * e + codes[p * n_sub + sub]];
                ref[p] = s;
            }
            for (const auto* k : variants()) {
                std::vector<double> out(n);
                k->pq_scan(lut.data(), e, codes.data(), n_sub, n, out.data());
                CHECK(same_bits(out, ref));
            }
        }
    }
}

TEST_CASE("sphere_entry is bit-identical across variants and matches the single test") {
    std::mt19937_64 rng(4);
    for (std::size_t n : {1, 2, 4, 5, 17, 256}) {
        for (int trial = 0; trial < 50; ++trial) {
            const auto cx = randoms(n, rng), cy = randoms(n, rng);
            const auto cz = randoms(n, rng, 1.0, 3.0);
            auto r2 = randoms(n, rng, 0.01, 4.0);
            // exact tangents exercise the strict-less rule
            const double ox = cx[0] + std::sqrt(r2[0]), oy = cy[0];
            const double oz = 0.0, t_max = std::uniform_real_distribution<double>(0, 3)(rng);
            std::vector<std::uint32_t> ref_idx;
            std::vector<double> ref_t;
            for (std::size_t i = 0; i < n; ++i) {
                double t;
                if (kernels::sphere_entry_one(ox, oy, oz, t_max, cx[i], cy[i], cz[i], r2[i], t)) {
                    ref_idx.push_back(static_cast<std::uint32_t>(i));
                    ref_t.push_back(t);
                }
            }
            for (const auto* k : variants()) {
                std::vector<std::uint32_t> idx(n);
                std::vector<double> t(n);
                const std::size_t h = k->sphere_entry(ox, oy, oz, t_max, cx.data(), cy.data(),
                                                      cz.data(), r2.data(), n, idx.data(), t.data());
                idx.resize(h);
                t.resize(h);
                CHECK(idx == ref_idx);
                CHECK(same_bits(t, ref_t));
            }
        }
    }
}

TEST_CASE("sphere_entry_one boundary rules") {
    double t = -1;
    // tangent: lateral distance equal to the radius is a miss
    CHECK_FALSE(kernels::sphere_entry_one(1.0, 0.0, 0.0, 10.0, 0.0, 0.0, 2.0, 1.0, t));
    // head-on entry at L - r
    REQUIRE(kernels::sphere_entry_one(0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 2.0, 1.0, t));
    CHECK(t == 1.0);
    // t_max is inclusive
    CHECK(kernels::sphere_entry_one(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 1.0, t));
    CHECK_FALSE(kernels::sphere_entry_one(0.0, 0.0, 0.0, 0.999, 0.0, 0.0, 2.0, 1.0, t));
    // origin inside the sphere gives a negative entry time
    CHECK_FALSE(kernels::sphere_entry_one(0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.5, 1.0, t));
}

TEST_CASE("runtime selection") {
    const auto before = kernels::active().name;
    CHECK(kernels::select("scalar"));
    CHECK(kernels::active().name == "scalar");
    CHECK_FALSE(kernels::select("neon"));
    if (kernels::avx2()) {
        CHECK(kernels::select("avx2"));
        CHECK(kernels::active().name == "avx2");
    }
    kernels::select(before);
}
