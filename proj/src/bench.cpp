#include "raylut/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "raylut/kernels.h"
#include "raylut/metrics.h"
#include "raylut/reference.h"

namespace raylut {

namespace {

using nlohmann::json;

std::size_t line_at(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(),
                                                   text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

/// Line of the first occurrence of "key": in the raw text, 0 if absent.
std::size_t line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_at(text, pos);
}

class ConfigReader {
   public:
    ConfigReader(const std::string& text, const json& j) : text_(text), j_(j) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const std::size_t line = line_of_key(text_, key);
        throw ConfigError("config line " + std::to_string(line == 0 ? 1 : line) + ": " + msg);
    }

    const json* find(const std::string& key) const {
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string str(const std::string& key, const std::string& def) const {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_string()) fail(key, "'" + key + "' must be a string");
        return v->get<std::string>();
    }

    std::size_t count(const std::string& key, std::size_t def, std::size_t lo = 1,
                      std::size_t hi = std::numeric_limits<std::size_t>::max()) const {
        const json* v = find(key);
        if (!v) return def;
        return count_value(key, *v, lo, hi);
    }

    std::size_t count_value(const std::string& key, const json& v, std::size_t lo,
                            std::size_t hi) const {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            fail(key, "'" + key + "' must be a non-negative integer");
        const auto x = v.get<std::uint64_t>();
        if (x < lo || x > hi)
            fail(key, "'" + key + "' must be in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        return static_cast<std::size_t>(x);
    }

    double real(const std::string& key, const json& v) const {
        if (v.is_null()) return std::numeric_limits<double>::infinity();
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "inf" || s == "none" || s == "noprune")
                return std::numeric_limits<double>::infinity();
            fail(key, "'" + key + "' has unknown value '" + s + "'");
        }
        if (!v.is_number()) fail(key, "'" + key + "' entries must be numbers");
        return v.get<double>();
    }

    const json& array(const std::string& key) const {
        const json* v = find(key);
        if (!v->is_array() || v->empty()) fail(key, "'" + key + "' must be a non-empty array");
        return *v;
    }

    bool flag(const std::string& key, bool def) const {
        const json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) fail(key, "'" + key + "' must be true or false");
        return v->get<bool>();
    }

   private:
    const std::string& text_;
    const json& j_;
};

std::filesystem::path resolve(const std::filesystem::path& dir, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() || dir.empty() ? path : dir / path;
}

StageStats stage_stats(std::vector<double> v) {
    StageStats s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    double sum = 0;
    for (double x : v) sum += x;
    s.mean_ns = sum / static_cast<double>(v.size());
    auto pct = [&](double p) {
        const auto i = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()))) - 1;
        return v[std::min(i, v.size() - 1)];
    };
    s.p50_ns = pct(0.50);
    s.p99_ns = pct(0.99);
    return s;
}

json stage_json(const StageStats& s) {
    return {{"mean_ns", s.mean_ns}, {"p50_ns", s.p50_ns}, {"p99_ns", s.p99_ns}};
}

json scale_json(double s) {
    return std::isinf(s) ? json("inf") : json(s);
}

} // namespace

BenchConfig parse_bench_config(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config line " + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) +
                          ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw ConfigError("config line 1: top level must be an object");
    const ConfigReader rd(text, j);

    static const std::set<std::string> known = {
            "base", "queries", "groundtruth", "index", "metric", "clusters", "entries",
            "nprobs_list", "scale_list", "modes", "k", "seed", "threads", "warmup",
            "repeats", "rerank", "out", "synthetic", "profile"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) rd.fail(key, "unknown key '" + key + "'");

    BenchConfig cfg;
    cfg.base = resolve(base_dir, rd.str("base", ""));
    cfg.queries = resolve(base_dir, rd.str("queries", ""));
    cfg.groundtruth = resolve(base_dir, rd.str("groundtruth", ""));
    cfg.index = resolve(base_dir, rd.str("index", ""));
    cfg.out = resolve(base_dir, rd.str("out", ""));
    try {
        cfg.metric = parse_metric(rd.str("metric", "l2"));
    } catch (const std::exception& e) {
        rd.fail("metric", e.what());
    }
    cfg.clusters = rd.count("clusters", cfg.clusters);
    cfg.entries = rd.count("entries", cfg.entries, 1, 65536);
    cfg.k = rd.count("k", cfg.k);
    cfg.seed = rd.count("seed", 1, 0);
    cfg.threads = static_cast<int>(rd.count("threads", 0, 0, 1024));
    cfg.warmup = rd.count("warmup", cfg.warmup, 0);
    cfg.repeats = rd.count("repeats", cfg.repeats, 1);
    cfg.rerank = rd.flag("rerank", false);
    cfg.profile = rd.flag("profile", true);

    if (rd.find("nprobs_list")) {
        cfg.nprobs_list.clear();
        for (const auto& v : rd.array("nprobs_list"))
            cfg.nprobs_list.push_back(rd.count_value("nprobs_list", v, 1, cfg.clusters));
    }
    if (rd.find("scale_list")) {
        cfg.scale_list.clear();
        for (const auto& v : rd.array("scale_list")) {
            const double s = rd.real("scale_list", v);
            if (!(s > 0.0)) rd.fail("scale_list", "'scale_list' entries must be positive");
            cfg.scale_list.push_back(s);
        }
    }
    if (rd.find("modes")) {
        cfg.modes.clear();
        for (const auto& v : rd.array("modes")) {
            if (!v.is_string()) rd.fail("modes", "'modes' entries must be strings");
            try {
                cfg.modes.push_back(parse_mode(v.get<std::string>()));
            } catch (const ConfigError& e) {
                rd.fail("modes", e.what());
            }
        }
    }
    if (const json* syn = rd.find("synthetic")) {
        if (!syn->is_object()) rd.fail("synthetic", "'synthetic' must be an object");
        const ConfigReader sr(text, *syn);
        SyntheticSpec s;
        s.n = sr.count("n", s.n);
        s.d = sr.count("d", s.d);
        s.blobs = sr.count("blobs", s.blobs);
        s.queries = sr.count("queries", s.queries);
        s.query_seed = sr.count("query_seed", s.query_seed, 0);
        if (const json* sp = sr.find("spread")) {
            if (!sp->is_number() || !(sp->get<double>() > 0.0))
                sr.fail("spread", "'spread' must be a positive number");
            s.spread = sp->get<double>();
        }
        cfg.synthetic = s;
    } else if (cfg.base.empty() || cfg.queries.empty()) {
        throw ConfigError("config line 1: 'base' and 'queries' are required unless 'synthetic' is given");
    }
    return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_bench_config(ss.str(), path.parent_path());
}

BenchReport run_bench(const BenchConfig& cfg, std::ostream* log) {
    using Clock = std::chrono::steady_clock;
    auto say = [&](const std::string& s) {
        if (log) *log << s << '\n' << std::flush;
    };

    Dataset base, queries;
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        base = gen_synthetic(s.n, s.d, s.blobs, s.spread, cfg.seed);
        queries = gen_synthetic_queries(s.queries, s.d, s.blobs, s.spread, cfg.seed, s.query_seed);
    } else {
        base = read_vecs(cfg.base, elem_from_extension(cfg.base));
        queries = read_vecs(cfg.queries, elem_from_extension(cfg.queries));
    }
    base.set_metric(cfg.metric);
    queries.set_metric(cfg.metric);

    BenchReport rep;
    rep.n = base.n();
    rep.d = base.d();
    rep.q = queries.n();
    rep.metric = cfg.metric;
    rep.k = cfg.k;
    rep.kernels = std::string(kernels::active().name);

    Index index;
    if (!cfg.index.empty() && std::filesystem::exists(cfg.index)) {
        say("loading index " + cfg.index.string());
        index = load_index(cfg.index);
        if (index.n != base.n() || index.metric != cfg.metric || index.d_orig != base.d())
            throw ConfigError("index " + cfg.index.string() + " does not match the base set");
    } else {
        say("building index");
        IndexBuildOptions opts;
        opts.clusters = cfg.clusters;
        opts.entries = cfg.entries;
        opts.seed = cfg.seed;
        const auto t0 = Clock::now();
        index = build_index(base, opts);
        rep.build_s = std::chrono::duration<double>(Clock::now() - t0).count();
        if (!cfg.index.empty()) save_index(index, cfg.index);
    }
    rep.clusters = index.ivf.c;
    rep.entries = index.entries();

    NeighborTable gt;
    const std::size_t gt_k = std::min(base.n(), std::max<std::size_t>(cfg.k, 100));
    if (!cfg.groundtruth.empty() && std::filesystem::exists(cfg.groundtruth)) {
        gt = read_neighbor_table(cfg.groundtruth);
        if (gt.q_count != queries.n())
            throw ConfigError("ground truth row count does not match the queries");
    } else {
        say("computing ground truth");
        gt = brute_force_topk(base, queries, cfg.metric, gt_k);
        if (!cfg.groundtruth.empty())
            write_neighbor_table(cfg.groundtruth, companion_scores_path(cfg.groundtruth), gt);
    }

    const double dense_per_probe = static_cast<double>(index.n_sub() * index.entries());
    for (auto nprobs : cfg.nprobs_list) {
        if (nprobs > index.ivf.c) throw ConfigError("nprobs " + std::to_string(nprobs) + " exceeds C");
        for (auto scale : cfg.scale_list) {
            for (auto mode : cfg.modes) {
                SearchParams p;
                p.nprobs = nprobs;
                p.k = cfg.k;
                p.thres_scale = scale;
                p.mode = mode;
                p.rerank = cfg.rerank;
                p.threads = cfg.threads;
                for (std::size_t w = 0; w < cfg.warmup; ++w) search_batch(queries, index, p);
                std::vector<double> walls;
                std::vector<QueryResult> res;
                for (std::size_t r = 0; r < cfg.repeats; ++r) {
                    const auto t0 = Clock::now();
                    res = search_batch(queries, index, p);
                    walls.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
                }
                std::sort(walls.begin(), walls.end());
                const double median = walls[walls.size() / 2];

                BenchRow row;
                row.nprobs = nprobs;
                row.scale = scale;
                row.mode = mode;
                row.median_batch_ms = median * 1e3;
                row.qps = median > 0 ? static_cast<double>(queries.n()) / median : 0.0;
                IdRows ids;
                std::vector<double> f, l, d;
                for (const auto& qr : res) {
                    ids.push_back(qr.ids);
                    f.push_back(static_cast<double>(qr.timings.filter_ns));
                    l.push_back(static_cast<double>(qr.timings.lut_ns));
                    d.push_back(static_cast<double>(qr.timings.distcalc_ns));
                    const double ratio = static_cast<double>(qr.ops.sphere_tests + qr.ops.lut_values) /
                                         (static_cast<double>(nprobs) * dense_per_probe);
                    row.op_ratio_mean += ratio;
                    row.op_ratio_max = std::max(row.op_ratio_max, ratio);
                    row.sphere_tests_mean += static_cast<double>(qr.ops.sphere_tests);
                    row.lut_values_mean += static_cast<double>(qr.ops.lut_values);
                    row.accumulations_mean += static_cast<double>(qr.ops.accumulations);
                    if (qr.underfull) ++row.underfull;
                }
                if (!res.empty()) {
                    row.op_ratio_mean /= static_cast<double>(res.size());
                    row.sphere_tests_mean /= static_cast<double>(res.size());
                    row.lut_values_mean /= static_cast<double>(res.size());
                    row.accumulations_mean /= static_cast<double>(res.size());
                }
                row.filter = stage_stats(f);
                row.lut = stage_stats(l);
                row.distcalc = stage_stats(d);
                row.recall_1_at_k = recall_1_at_k(ids, gt, cfg.k);
                if (cfg.k >= 1000 && gt.k >= 100) row.recall_100_at_1000 = recall_a_at_b(ids, gt, 100, 1000);
                std::ostringstream msg;
                msg << "nprobs=" << nprobs << " scale=" << scale << " mode=" << mode_name(mode)
                    << " R1@" << cfg.k << "=" << row.recall_1_at_k << " op_ratio=" << row.op_ratio_mean
                    << " qps=" << row.qps;
                say(msg.str());
                rep.rows.push_back(row);
            }
        }
    }

    if (cfg.profile && queries.n() > 0) {
        const std::size_t top = std::min<std::size_t>(100, gt.k);
        rep.usage = profile_entry_usage(index, queries, gt, top);
        rep.locality = profile_locality_cdf(index, queries, gt, top);
    }
    return rep;
}

std::string report_to_json(const BenchReport& r) {
    json j;
    j["dataset"] = {{"n", r.n}, {"d", r.d}, {"queries", r.q}, {"metric", metric_name(r.metric)}};
    j["index"] = {{"clusters", r.clusters}, {"entries", r.entries}, {"build_s", r.build_s}};
    j["k"] = r.k;
    j["kernels"] = r.kernels;
    json rows = json::array();
    for (const auto& row : r.rows) {
        json o;
        o["nprobs"] = row.nprobs;
        o["scale"] = scale_json(row.scale);
        o["mode"] = mode_name(row.mode);
        o["recall_1_at_k"] = row.recall_1_at_k;
        o["recall_100_at_1000"] = row.recall_100_at_1000 ? json(*row.recall_100_at_1000) : json(nullptr);
        o["qps"] = row.qps;
        o["median_batch_ms"] = row.median_batch_ms;
        o["latency"] = {{"filter", stage_json(row.filter)},
                        {"lut", stage_json(row.lut)},
                        {"distcalc", stage_json(row.distcalc)}};
        o["op_ratio_mean"] = row.op_ratio_mean;
        o["op_ratio_max"] = row.op_ratio_max;
        o["sphere_tests_mean"] = row.sphere_tests_mean;
        o["lut_values_mean"] = row.lut_values_mean;
        o["accumulations_mean"] = row.accumulations_mean;
        o["underfull"] = row.underfull;
        rows.push_back(o);
    }
    j["rows"] = rows;
    if (r.usage) {
        j["entry_usage"] = {{"mean_ratio", r.usage->mean_ratio}, {"max_ratio", r.usage->max_ratio}};
    }
    if (r.locality) j["locality_cdf"] = r.locality->mean_cdf;
    return j.dump(2);
}

std::string report_to_csv(const BenchReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "nprobs,scale,mode,recall_1_at_k,recall_100_at_1000,qps,median_batch_ms,"
           "filter_mean_ns,lut_mean_ns,distcalc_mean_ns,lut_p99_ns,op_ratio_mean,op_ratio_max,"
           "sphere_tests_mean,lut_values_mean,accumulations_mean,underfull\n";
    for (const auto& row : r.rows) {
        out << row.nprobs << ',' << (std::isinf(row.scale) ? std::string("inf") : std::to_string(row.scale))
            << ',' << mode_name(row.mode) << ',' << row.recall_1_at_k << ',';
        if (row.recall_100_at_1000) out << *row.recall_100_at_1000;
        out << ',' << row.qps << ',' << row.median_batch_ms << ',' << row.filter.mean_ns << ','
            << row.lut.mean_ns << ',' << row.distcalc.mean_ns << ',' << row.lut.p99_ns << ','
            << row.op_ratio_mean << ',' << row.op_ratio_max << ',' << row.sphere_tests_mean << ','
            << row.lut_values_mean << ',' << row.accumulations_mean << ','
            << row.underfull << '\n';
    }
    return out.str();
}

} // namespace raylut
