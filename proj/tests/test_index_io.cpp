#include <doctest.h>

#include <cstring>

#include "raylut/index.h"
#include "raylut/search.h"
#include "util.h"

using namespace raylut;
using raylut::testing::TempDir;
using raylut::testing::file_bytes;
using raylut::testing::put_bytes;

namespace {

const Index& small_index() {
    static const Index ix = [] {
        IndexBuildOptions opts;
        opts.clusters = 8;
        opts.entries = 16;
        opts.threshold_samples = 150;
        return build_index(gen_synthetic(1500, 11, 8, 0.05, 3), opts);
    }();
    return ix;
}

} // namespace

TEST_CASE("bundle round trip") {
    const auto& a = small_index();
    TempDir dir;
    save_index(a, dir / "a.raylut");
    const auto b = load_index(dir / "a.raylut");

    CHECK(b.metric == a.metric);
    CHECK(b.n == a.n);
    CHECK(b.d_orig == 11);
    CHECK(b.d == 12);
    CHECK(b.ivf.centroids == a.ivf.centroids);
    CHECK(b.ivf.labels == a.ivf.labels);
    CHECK(b.ivf.sq_norms == a.ivf.sq_norms);
    CHECK(b.codebook.entries == a.codebook.entries);
    CHECK(b.inv.offsets() == a.inv.offsets());
    CHECK(b.inv.ids() == a.inv.ids());
    CHECK(b.codes == a.codes);
    CHECK(b.members == a.members);
    CHECK(b.thresholds.thresholds_max == a.thresholds.thresholds_max);
    for (std::size_t s = 0; s < a.n_sub(); ++s) {
        CHECK(b.thresholds.polys[s].coefficients == a.thresholds.polys[s].coefficients);
        CHECK(b.thresholds.maps[s].density == a.thresholds.maps[s].density);
        CHECK(b.scene.sub[s].depth == a.scene.sub[s].depth);
    }
    CHECK(b.bvh.sphere_order() == a.bvh.sphere_order());

    // saving the loaded index reproduces the bytes
    save_index(b, dir / "b.raylut");
    CHECK(file_bytes(dir / "a.raylut") == file_bytes(dir / "b.raylut"));

    // and searches agree
    const auto q = gen_synthetic_queries(20, 11, 8, 0.05, 3, 9);
    SearchParams p;
    p.nprobs = 2;
    p.k = 10;
    const auto ra = search_batch(q, a, p), rb = search_batch(q, b, p);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].ids == rb[i].ids);
        CHECK(ra[i].scores == rb[i].scores);
    }
}

TEST_CASE("corrupt bundles are rejected") {
    TempDir dir;
    save_index(small_index(), dir / "ok.raylut");
    const auto bytes = file_bytes(dir / "ok.raylut");
    REQUIRE(bytes.size() > 100);

    auto bad = bytes;
    bad[0] = 'X';
    put_bytes(dir / "magic.raylut", bad);
    CHECK_THROWS_AS(load_index(dir / "magic.raylut"), FormatError);

    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        put_bytes(dir / "cut.raylut", std::vector<char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut)));
        CHECK_THROWS_AS(load_index(dir / "cut.raylut"), FormatError);
    }

    bad = bytes;
    bad.push_back(0);
    put_bytes(dir / "tail.raylut", bad);
    CHECK_THROWS_AS(load_index(dir / "tail.raylut"), FormatError);

    // the point count follows the 5-byte magic
    bad = bytes;
    std::uint64_t n = 0;
    std::memcpy(&n, bad.data() + 5, sizeof n);
    n += 1;
    std::memcpy(bad.data() + 5, &n, sizeof n);
    put_bytes(dir / "count.raylut", bad);
    CHECK_THROWS_AS(load_index(dir / "count.raylut"), FormatError);

    CHECK_THROWS_AS(load_index(dir / "missing.raylut"), FormatError);
}

TEST_CASE("query preparation pads and validates") {
    const auto& ix = small_index();
    const auto q = gen_synthetic_queries(3, 11, 8, 0.05, 3, 9);
    const auto p = ix.prepare_queries(q);
    CHECK(p.d() == 12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.row(i)[11] == 0.0f);
    CHECK(ix.prepare_queries(p).d() == 12);
    CHECK_THROWS_AS(ix.prepare_queries(Dataset(1, 10, std::vector<float>(10, 0.0f))),
                    std::invalid_argument);
}
