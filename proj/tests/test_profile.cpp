#include <doctest.h>

#include <random>

#include "raylut/profile.h"
#include "raylut/reference.h"

using namespace raylut;

TEST_CASE("locality CDF basics") {
    const auto all_first = locality_cdf(std::vector<std::uint32_t>(100, 0), 8);
    for (double v : all_first) CHECK(v == 1.0);
    const auto c = locality_cdf(std::vector<std::uint32_t>{0, 1, 1, 3}, 4);
    CHECK(c == std::vector<double>{0.25, 0.75, 0.75, 1.0});
    CHECK_THROWS_AS(locality_cdf(std::vector<std::uint32_t>{4}, 4), std::invalid_argument);
}

TEST_CASE("uniform ranks give a near-diagonal CDF") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint32_t> u(0, 63);
    std::vector<double> mid;
    double mean = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<std::uint32_t> r(100);
        for (auto& v : r) v = u(rng);
        const auto cdf = locality_cdf(r, 64);
        mean += cdf[31] / 1000.0;
        for (std::size_t k = 1; k < 64; ++k) CHECK(cdf[k] >= cdf[k - 1]);
        CHECK(cdf[63] == 1.0);
    }
    CHECK(std::abs(mean - 0.5) <= 0.1);
}

TEST_CASE("profiles on a clustered index") {
    const auto base = gen_synthetic(10000, 16, 32, 0.05, 2);
    const auto queries = gen_synthetic_queries(50, 16, 32, 0.05, 2, 3);
    IndexBuildOptions opts;
    opts.clusters = 32;
    opts.entries = 64;
    const auto ix = build_index(base, opts);
    const auto gt = brute_force_topk(base, queries, Metric::L2, 100);

    const auto u = profile_entry_usage(ix, queries, gt);
    REQUIRE(u.mean_ratio.size() == ix.n_sub());
    for (std::size_t s = 0; s < ix.n_sub(); ++s) {
        CHECK(u.mean_ratio[s] > 0.0);
        CHECK(u.mean_ratio[s] < 1.0);
        CHECK(u.mean_ratio[s] < u.max_ratio[s]);
        CHECK(u.max_ratio[s] <= 1.0);
        // frequency totals equal the number of used entries summed over queries
        std::uint64_t total = 0;
        for (std::size_t e = 0; e < ix.entries(); ++e) total += u.frequency[s * ix.entries() + e];
        CHECK(double(total) == doctest::Approx(u.mean_ratio[s] * 50 * 64));
    }

    const auto lp = profile_locality_cdf(ix, queries, gt);
    for (std::size_t s = 0; s < ix.n_sub(); ++s) {
        for (std::size_t r = 1; r < ix.entries(); ++r)
            CHECK(lp.cdf[s * ix.entries() + r] >= lp.cdf[s * ix.entries() + r - 1] - 1e-12);
        CHECK(lp.cdf[s * ix.entries() + ix.entries() - 1] == doctest::Approx(1.0));
    }
    CHECK(lp.mean_cdf.back() == doctest::Approx(1.0));

    NeighborTable short_gt = brute_force_topk(base, queries, Metric::L2, 10);
    CHECK_THROWS_AS(profile_entry_usage(ix, queries, short_gt), std::invalid_argument);
}

TEST_CASE("a single entry is always fully used") {
    const auto base = gen_synthetic(500, 4, 4, 0.05, 4);
    const auto queries = gen_synthetic_queries(10, 4, 4, 0.05, 4, 5);
    IndexBuildOptions opts;
    opts.clusters = 4;
    opts.entries = 1;
    const auto ix = build_index(base, opts);
    const auto gt = brute_force_topk(base, queries, Metric::L2, 100);
    const auto u = profile_entry_usage(ix, queries, gt);
    for (double r : u.mean_ratio) CHECK(r == 1.0);
    for (double r : u.max_ratio) CHECK(r == 1.0);
    const auto lp = profile_locality_cdf(ix, queries, gt);
    for (double v : lp.cdf) CHECK(v == 1.0);
}
