#include <doctest.h>

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "fixture.h"
#include "raylut/bench.h"
#include "raylut/metrics.h"
#include "util.h"

using namespace raylut;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_bench_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_bench_config(R"({
  "base": "b.fvecs",
  "queries": "q.fvecs",
  "metric": "ip",
  "clusters": 32,
  "entries": 16,
  "nprobs_list": [1, 4],
  "scale_list": [0.5, 1.0, "inf", null],
  "modes": ["h", "m", "l"],
  "k": 10,
  "seed": 3,
  "threads": 2
})",
                                        "/data");
    CHECK(cfg.base == std::filesystem::path("/data/b.fvecs"));
    CHECK(cfg.metric == Metric::InnerProduct);
    CHECK(cfg.clusters == 32);
    CHECK(cfg.entries == 16);
    CHECK(cfg.nprobs_list == std::vector<std::size_t>{1, 4});
    REQUIRE(cfg.scale_list.size() == 4);
    CHECK(std::isinf(cfg.scale_list[2]));
    CHECK(std::isinf(cfg.scale_list[3]));
    CHECK(cfg.modes.size() == 3);
    CHECK(cfg.k == 10);
    CHECK(cfg.seed == 3);
    CHECK(cfg.threads == 2);
    CHECK_FALSE(cfg.synthetic);

    const auto syn = parse_bench_config(R"({"synthetic": {"n": 500, "d": 8}})");
    REQUIRE(syn.synthetic);
    CHECK(syn.synthetic->n == 500);
    CHECK(syn.synthetic->blobs == SyntheticSpec{}.blobs);
}

TEST_CASE("config errors name the offending line") {
    CHECK(error_of("{\n  \"synthetic\": {},\n  \"colour\": 3\n}").find("config line 3") == 0);
    CHECK(error_of("{\n  \"synthetic\": {},\n  \"colour\": 3\n}").find("colour") != std::string::npos);
    CHECK(error_of("{\n\"synthetic\": {},\n\n\"k\": -1}").find("config line 4") == 0);
    CHECK(error_of("{\n\"synthetic\": {},\n\"modes\": [\"q\"]}").find("config line 3") == 0);
    CHECK(error_of("{\n\"synthetic\": {},\n\"scale_list\": [0]}").find("config line 3") == 0);
    CHECK(error_of("{\n\"synthetic\": {},\n\"metric\": \"cosine\"}").find("config line 3") == 0);
    CHECK(error_of("{\n\"synthetic\": {}\n\"k\": 3}").find("config line") == 0);
    CHECK(error_of("{\"k\": 3}").find("required") != std::string::npos);
    CHECK(error_of("[1]").find("config line 1") == 0);
    CHECK(error_of(R"({"synthetic": {}, "k": 10})").empty());
    CHECK_THROWS_AS(load_bench_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("a single-configuration run") {
    auto cfg = parse_bench_config(R"({
  "synthetic": {"n": 3000, "d": 16, "blobs": 16, "queries": 40},
  "clusters": 16, "entries": 32, "nprobs_list": [4], "scale_list": [1.0],
  "modes": ["h"], "k": 10, "warmup": 0, "repeats": 1
})");
    raylut::testing::TempDir dir;
    cfg.index = dir.path() / "idx.raylut";
    cfg.groundtruth = dir.path() / "gt.ivecs";
    std::ostringstream log;
    const auto rep = run_bench(cfg, &log);
    REQUIRE(rep.rows.size() == 1);
    const auto& row = rep.rows[0];
    CHECK(rep.n == 3000);
    CHECK(rep.q == 40);
    CHECK(row.recall_1_at_k >= 0.0);
    CHECK(row.recall_1_at_k <= 1.0);
    CHECK_FALSE(row.recall_100_at_1000);
    CHECK(row.op_ratio_mean <= 1.0);
    CHECK(row.op_ratio_mean <= row.op_ratio_max);
    CHECK(row.qps > 0.0);
    CHECK(row.filter.p50_ns <= row.filter.p99_ns);
    REQUIRE(rep.usage);
    for (double v : rep.usage->mean_ratio) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    REQUIRE(rep.locality);
    CHECK(rep.locality->mean_cdf.back() == doctest::Approx(1.0));
    CHECK(std::filesystem::exists(cfg.index));
    CHECK(std::filesystem::exists(cfg.groundtruth));
    CHECK(log.str().find("R1@10") != std::string::npos);

    const auto j = nlohmann::json::parse(report_to_json(rep));
    CHECK(j["rows"].size() == 1);
    CHECK(j["rows"][0]["mode"] == "h");
    CHECK(j["rows"][0]["recall_100_at_1000"].is_null());
    const auto csv = report_to_csv(rep);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    // second run reuses the saved index and ground truth
    std::ostringstream log2;
    const auto again = run_bench(cfg, &log2);
    CHECK(log2.str().find("loading index") != std::string::npos);
    CHECK(again.rows[0].recall_1_at_k == row.recall_1_at_k);
}

namespace {

// R1@100 per (nprobs, scale) for modes H, M, L in that order.
std::vector<std::array<double, 3>> sweep(std::size_t nprobs) {
    const auto& b = raylut::testing::benchmark();
    std::vector<std::array<double, 3>> out;
    for (double scale : {0.25, 0.5, 0.75, 1.0, double(INFINITY)}) {
        SearchParams p;
        p.nprobs = nprobs;
        p.k = 100;
        p.thres_scale = scale;
        std::array<double, 3> r{};
        int i = 0;
        for (auto mode : {SearchMode::Exact, SearchMode::HitCountPenalty, SearchMode::HitCount}) {
            p.mode = mode;
            r[i++] = recall_1_at_k(raylut::testing::id_rows(search_batch(b.queries, b.index, p)), b.gt, 100);
        }
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("exact-mode recall never drops as the scale grows") {
    for (std::size_t nprobs : {1u, 4u}) {
        const auto rows = sweep(nprobs);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CAPTURE(nprobs);
            CAPTURE(i);
            CHECK(rows[i][0] >= rows[i - 1][0]);
        }
    }
}

TEST_CASE("recall orders the modes H >= M >= L") {
    const double scales[] = {0.25, 0.5, 0.75, 1.0, double(INFINITY)};
    for (std::size_t nprobs : {1u, 4u}) {
        const auto rows = sweep(nprobs);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CAPTURE(nprobs);
            CAPTURE(scales[i]);
            CHECK(rows[i][0] >= rows[i][1]);
            CHECK(rows[i][1] >= rows[i][2]);
        }
    }
}
