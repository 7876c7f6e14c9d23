#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "raylut/bench.h"
#include "raylut/reference.h"

using namespace raylut;

namespace {

double parse_scale(const std::string& s) {
    if (s == "inf" || s == "none") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("--scale: not a number: " + s);
    }
    if (pos != s.size() || !(v > 0.0)) throw ConfigError("--scale must be positive or 'inf'");
    return v;
}

Dataset load(const std::string& path, Metric m) {
    Dataset ds = read_vecs(path, elem_from_extension(path));
    ds.set_metric(m);
    return ds;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"raylut: IVFPQ search with ray-traced selective lookup tables"};
    app.require_subcommand(1);

    std::string base, queries, out, metric = "l2", index_path, gt_path, config, mode = "h",
                                     scale = "1.0", out_dir;
    std::size_t clusters = 64, entries = 64, k = 100, nprobs = 1, samples = 500;
    std::uint64_t seed = 1;
    int threads = 0;
    bool rerank = false;
    double ip_floor = std::numeric_limits<double>::quiet_NaN();

    auto* build = app.add_subcommand("build", "Train an index and write the bundle");
    build->add_option("--base", base, "Base vectors (.fvecs/.bvecs/.ivecs)")->required();
    build->add_option("--metric", metric, "l2 or ip")->check(CLI::IsMember({"l2", "ip"}));
    build->add_option("--clusters", clusters, "IVF clusters C");
    build->add_option("--entries", entries, "Codebook entries E per subspace");
    build->add_option("--seed", seed, "Training seed");
    build->add_option("--threshold-samples", samples, "Pseudo-queries for the threshold model");
    build->add_option("--out", out, "Index bundle path")->required();

    auto* gtc = app.add_subcommand("groundtruth", "Exact top-k by brute force");
    gtc->add_option("--base", base)->required();
    gtc->add_option("--queries", queries)->required();
    gtc->add_option("--k", k);
    gtc->add_option("--metric", metric)->check(CLI::IsMember({"l2", "ip"}));
    gtc->add_option("--out", out, "ids .ivecs; scores go next to it as .fvecs")->required();

    auto* search = app.add_subcommand("search", "Search an index");
    search->add_option("--index", index_path)->required();
    search->add_option("--queries", queries)->required();
    search->add_option("--k", k);
    search->add_option("--nprobs", nprobs);
    search->add_option("--scale", scale, "Threshold scale, or 'inf' to disable pruning");
    search->add_option("--mode", mode, "h, m or l")->check(CLI::IsMember({"h", "m", "l"}));
    search->add_option("--ip-floor", ip_floor, "Minimum inner product kept by rays (ip only)");
    search->add_flag("--rerank", rerank, "Mode m: rescore the top 4k exactly");
    search->add_option("--threads", threads);
    search->add_option("--out", out, "ids .ivecs; scores go next to it as .fvecs")->required();

    auto* bench = app.add_subcommand("bench", "Run a parameter sweep from a JSON config");
    bench->add_option("--config", config)->required();

    SyntheticSpec syn;
    std::string out_queries;
    auto* synth = app.add_subcommand("synth", "Write a seeded Gaussian-blob dataset as fvecs");
    synth->add_option("--n", syn.n, "Base points");
    synth->add_option("--d", syn.d, "Dimension");
    synth->add_option("--blobs", syn.blobs, "Blob count");
    synth->add_option("--spread", syn.spread, "Blob standard deviation");
    synth->add_option("--queries", syn.queries, "Query count");
    synth->add_option("--seed", seed, "Blob seed");
    synth->add_option("--query-seed", syn.query_seed, "Query stream seed");
    synth->add_option("--out-base", out, "Base .fvecs")->required();
    synth->add_option("--out-queries", out_queries, "Query .fvecs")->required();

    auto* prof = app.add_subcommand("profile", "Entry usage and locality profiles");
    prof->add_option("--index", index_path)->required();
    prof->add_option("--queries", queries)->required();
    prof->add_option("--gt", gt_path)->required();
    prof->add_option("--out-dir", out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*build) {
            IndexBuildOptions opts;
            opts.clusters = clusters;
            opts.entries = entries;
            opts.seed = seed;
            opts.threshold_samples = samples;
            const Index ix = build_index(load(base, parse_metric(metric)), opts);
            save_index(ix, out);
            std::cerr << "index: N=" << ix.n << " D=" << ix.d_orig << " C=" << ix.ivf.c
                      << " E=" << ix.entries() << " -> " << out << '\n';
        } else if (*gtc) {
            const Metric m = parse_metric(metric);
            const auto gt = brute_force_topk(load(base, m), load(queries, m), m, k);
            write_neighbor_table(out, companion_scores_path(out), gt);
        } else if (*search) {
            const Index ix = load_index(index_path);
            SearchParams p;
            p.k = k;
            p.nprobs = nprobs;
            p.thres_scale = parse_scale(scale);
            p.mode = parse_mode(mode);
            p.rerank = rerank;
            p.threads = threads;
            if (!std::isnan(ip_floor)) p.ip_floor = ip_floor;
            const auto res = search_batch(load(queries, ix.metric), ix, p);
            NeighborTable t;
            t.q_count = res.size();
            t.k = k;
            t.ids.assign(t.q_count * k, -1);
            t.scores.assign(t.q_count * k, std::numeric_limits<float>::quiet_NaN());
            for (std::size_t q = 0; q < res.size(); ++q)
                for (std::size_t j = 0; j < res[q].ids.size(); ++j) {
                    t.ids[q * k + j] = res[q].ids[j];
                    t.scores[q * k + j] = static_cast<float>(res[q].scores[j]);
                }
            write_neighbor_table(out, companion_scores_path(out), t);
        } else if (*bench) {
            const BenchConfig cfg = load_bench_config(config);
            const BenchReport rep = run_bench(cfg, &std::cerr);
            if (cfg.out.empty()) {
                std::cout << report_to_json(rep) << '\n';
            } else {
                auto json_path = cfg.out, csv_path = cfg.out;
                json_path += ".json";
                csv_path += ".csv";
                write_text(json_path, report_to_json(rep) + "\n");
                write_text(csv_path, report_to_csv(rep));
            }
        } else if (*synth) {
            write_vecs(out, gen_synthetic(syn.n, syn.d, syn.blobs, syn.spread, seed),
                       VecsElem::Float32);
            write_vecs(out_queries,
                       gen_synthetic_queries(syn.queries, syn.d, syn.blobs, syn.spread, seed,
                                             syn.query_seed),
                       VecsElem::Float32);
        } else if (*prof) {
            const Index ix = load_index(index_path);
            const Dataset q = load(queries, ix.metric);
            const NeighborTable gt = read_neighbor_table(gt_path);
            const std::size_t top = std::min<std::size_t>(100, gt.k);
            const auto usage = profile_entry_usage(ix, q, gt, top);
            const auto loc = profile_locality_cdf(ix, q, gt, top);
            std::filesystem::create_directories(out_dir);
            std::ostringstream u, h, c;
            u << "subspace,mean_ratio,max_ratio\n";
            for (std::size_t s = 0; s < usage.n_sub; ++s)
                u << s << ',' << usage.mean_ratio[s] << ',' << usage.max_ratio[s] << '\n';
            h << "subspace,rank,queries_using\n";
            for (std::size_t s = 0; s < usage.n_sub; ++s)
                for (std::size_t r = 0; r < usage.entries; ++r)
                    h << s << ',' << r << ',' << usage.frequency[s * usage.entries + r] << '\n';
            c << "subspace,rank,cdf\n";
            for (std::size_t s = 0; s < loc.n_sub; ++s)
                for (std::size_t r = 0; r < loc.entries; ++r)
                    c << s << ',' << r << ',' << loc.cdf[s * loc.entries + r] << '\n';
            const std::filesystem::path dir(out_dir);
            write_text(dir / "entry_usage.csv", u.str());
            write_text(dir / "usage_heatmap.csv", h.str());
            write_text(dir / "locality_cdf.csv", c.str());
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
