#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "raylut/profile.h"
#include "raylut/search.h"

namespace raylut {

struct SyntheticSpec {
    std::size_t n = 20000;
    std::size_t d = 32;
    std::size_t blobs = 64;
    double spread = 0.05;
    std::size_t queries = 200;
    std::uint64_t query_seed = 7;
};

struct BenchConfig {
    std::filesystem::path base, queries, groundtruth, index, out;
    std::optional<SyntheticSpec> synthetic;
    Metric metric = Metric::L2;
    std::size_t clusters = 64;
    std::size_t entries = 64;
    std::vector<std::size_t> nprobs_list{1};
    std::vector<double> scale_list{1.0}; // +inf = no pruning
    std::vector<SearchMode> modes{SearchMode::Exact};
    std::size_t k = 100;
    std::uint64_t seed = 1;
    int threads = 0;
    std::size_t warmup = 3;
    std::size_t repeats = 10;
    bool rerank = false;
    bool profile = true;
};

/// Parses the JSON config. Relative paths resolve against base_dir. Errors
/// are ConfigError with a "line N" diagnostic.
BenchConfig parse_bench_config(const std::string& text,
                               const std::filesystem::path& base_dir = {});
BenchConfig load_bench_config(const std::filesystem::path& path);

struct StageStats {
    double mean_ns = 0, p50_ns = 0, p99_ns = 0;
};

struct BenchRow {
    std::size_t nprobs = 0;
    double scale = 0;
    SearchMode mode = SearchMode::Exact;
    double recall_1_at_k = 0;
    std::optional<double> recall_100_at_1000;
    double qps = 0;
    double median_batch_ms = 0;
    StageStats filter, lut, distcalc;
    double op_ratio_mean = 0; // (sphere_tests + lut_values) / (nprobs * n_sub * E)
    double op_ratio_max = 0;
    double sphere_tests_mean = 0;
    double lut_values_mean = 0;
    double accumulations_mean = 0;
    std::size_t underfull = 0;
};

struct BenchReport {
    std::size_t n = 0, d = 0, q = 0, clusters = 0, entries = 0, k = 0;
    Metric metric = Metric::L2;
    std::string kernels;
    double build_s = 0;
    std::vector<BenchRow> rows;
    std::optional<EntryUsage> usage;
    std::optional<LocalityProfile> locality;
};

BenchReport run_bench(const BenchConfig& cfg, std::ostream* log = nullptr);

std::string report_to_json(const BenchReport& r);
/// One line per sweep row.
std::string report_to_csv(const BenchReport& r);

} // namespace raylut
