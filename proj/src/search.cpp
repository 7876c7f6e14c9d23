#include "raylut/search.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include <omp.h>

#include "raylut/kernels.h"

namespace raylut {

SearchMode parse_mode(std::string_view s) {
    if (s == "h" || s == "H" || s == "exact") return SearchMode::Exact;
    if (s == "m" || s == "M" || s == "hitcount_penalty") return SearchMode::HitCountPenalty;
    if (s == "l" || s == "L" || s == "hitcount") return SearchMode::HitCount;
    throw ConfigError("unknown search mode '" + std::string(s) + "' (expected h, m or l)");
}

std::string_view mode_name(SearchMode m) {
    switch (m) {
        case SearchMode::Exact: return "h";
        case SearchMode::HitCountPenalty: return "m";
        case SearchMode::HitCount: return "l";
    }
    return "?";
}

std::vector<Probe> filter_clusters(std::span<const float> query, const IvfModel& ivf,
                                   Metric metric, std::size_t nprobs) {
    if (nprobs == 0 || nprobs > ivf.c)
        throw std::invalid_argument("filter_clusters: nprobs must be in [1, C]");
    if (query.size() != ivf.d) throw std::invalid_argument("filter_clusters: dimension mismatch");
    const auto& kt = kernels::active();
    const double qn = kt.dot_f32(query.data(), query.data(), ivf.d);
    std::vector<std::pair<double, std::uint32_t>> scored(ivf.c);
    for (std::size_t c = 0; c < ivf.c; ++c) {
        const double ip = kt.dot_f32(query.data(), ivf.centroid(c).data(), ivf.d);
        const double sc = metric == Metric::L2 ? std::max(0.0, ivf.sq_norms[c] - 2.0 * ip + qn)
                                               : ip;
        scored[c] = {sc, static_cast<std::uint32_t>(c)};
    }
    auto cmp = [metric](const auto& a, const auto& b) {
        if (a.first != b.first) return better(metric, a.first, b.first);
        return a.second < b.second;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(nprobs),
                      scored.end(), cmp);
    std::vector<Probe> probes(nprobs);
    for (std::size_t j = 0; j < nprobs; ++j) {
        auto& p = probes[j];
        p.cluster = scored[j].second;
        p.coarse = scored[j].first;
        const auto cent = ivf.centroid(p.cluster);
        p.residual.resize(ivf.d);
        for (std::size_t i = 0; i < ivf.d; ++i)
            p.residual[i] = static_cast<double>(query[i]) - static_cast<double>(cent[i]);
    }
    return probes;
}

void SearchScratch::reset(std::size_t n) {
    score.assign(n, 0.0);
    aux.assign(n, 0.0);
    stamp_.assign(n, 0);
    epoch_ = 0;
    touched.clear();
}

void SearchScratch::next_epoch() {
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
    touched.clear();
}

void SearchScratch::touch(std::uint32_t p, double init, double init_aux) {
    stamp_[p] = epoch_;
    score[p] = init;
    aux[p] = init_aux;
    touched.push_back(p);
}

L2Lut build_selective_lut(std::span<const float> query, std::span<const Probe> probes,
                          const Index& index, const SearchParams& params,
                          SearchScratch& scratch, OpCounts* ops) {
    if (query.size() != index.d)
        throw std::invalid_argument("build_selective_lut: dimension mismatch");
    if (index.scene.metric != index.metric)
        throw std::invalid_argument("build_selective_lut: scene metric does not match index");
    const std::size_t n_sub = index.n_sub();
    const bool l2 = index.metric == Metric::L2;
    L2Lut lut;
    lut.nprobs = probes.size();
    lut.n_sub = n_sub;
    lut.offsets.assign(probes.size() * n_sub + 1, 0);
    lut.r_eff.assign(probes.size() * n_sub, 0.0);
    lut.threshold.assign(probes.size() * n_sub, 0.0);

    for (std::size_t j = 0; j < probes.size(); ++j) {
        const auto& probe = probes[j];
        for (std::size_t s = 0; s < n_sub; ++s) {
            const std::size_t slot = j * n_sub + s;
            lut.offsets[slot] = static_cast<std::uint32_t>(lut.items.size());
            const auto& g = index.scene.sub[s];
            Ray ray;
            ray.ox = probe.residual[2 * s];
            ray.oy = probe.residual[2 * s + 1];
            ray.oz = g.depth - g.standoff;
            ray.s = static_cast<std::uint32_t>(s);
            ray.c = probe.cluster;
            const double q2 = ray.ox * ray.ox + ray.oy * ray.oy;
            double r_eff = g.base_radius;
            if (l2) {
                const double thr = index.thresholds.predict(s, ray.ox, ray.oy);
                lut.threshold[slot] = thr;
                r_eff = effective_radius(thr, params.thres_scale, g.base_radius);
                if (!(r_eff > 0.0)) continue;
                ray.t_max = threshold_to_tmax(thr, params.thres_scale, g.base_radius, g.standoff);
            } else {
                ray.t_max = params.ip_floor
                                    ? ip_floor_to_tmax(*params.ip_floor, q2, g.base_radius,
                                                       g.standoff)
                                    : g.standoff;
            }
            lut.r_eff[slot] = r_eff;

            scratch.hits.clear();
            TraversalStats st;
            index.bvh.traverse(ray, scratch.hits, st);
            if (ops) {
                ops->sphere_tests += st.sphere_tests;
                ops->nodes_visited += st.nodes_visited;
            }
            std::sort(scratch.hits.begin(), scratch.hits.end(),
                      [](const Hit& a, const Hit& b) { return a.e < b.e; });
            const double inner_t =
                    g.standoff - std::sqrt(g.base_radius * g.base_radius - r_eff * r_eff / 4.0);
            for (const auto& h : scratch.hits) {
                if (h.s != s) continue;
                LutItem item{h.e, 0.0, h.t_hit, false};
                if (l2) {
                    item.value = t_hit_to_l2(h.t_hit, g.base_radius, g.standoff);
                    item.inner = h.t_hit <= inner_t;
                } else {
                    item.value = t_hit_to_ip(h.t_hit, q2, g.base_radius, g.standoff);
                    const double r = index.scene.sphere(s, h.e).r;
                    const double depth = g.standoff - h.t_hit;
                    const double d2 = r * r - depth * depth;
                    const double rest = std::max(0.0, g.standoff - ray.t_max);
                    const double reach2 = std::max(0.0, r * r - rest * rest);
                    item.inner = d2 <= reach2 / 4.0;
                }
                lut.items.push_back(item);
            }
        }
    }
    lut.offsets.back() = static_cast<std::uint32_t>(lut.items.size());
    if (ops) ops->lut_values += lut.items.size();
    return lut;
}

std::vector<Candidate> accumulate_exact(const L2Lut& lut, std::span<const Probe> probes,
                                        const Index& index, SearchScratch& scratch,
                                        OpCounts* ops) {
    const std::size_t n_sub = index.n_sub();
    const bool l2 = index.metric == Metric::L2;
    scratch.next_epoch();
    std::vector<Candidate> out;
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < probes.size(); ++j) {
        const auto c = probes[j].cluster;
        const std::size_t first = scratch.touched.size();
        double total_pen = 0.0;
        for (std::size_t s = 0; s < n_sub; ++s) {
            const double r = lut.r_eff[j * n_sub + s];
            const double pen = l2 ? r * r : 0.0;
            total_pen += pen;
            for (const auto& item : lut.list(j, s)) {
                const double v = l2 ? item.value * item.value : item.value;
                for (auto p : index.inv.list(c, s, item.entry)) {
                    if (!scratch.seen(p)) scratch.touch(p, 0.0, 0.0);
                    scratch.score[p] += v;
                    scratch.aux[p] += pen;
                    ++acc;
                }
            }
        }
        for (std::size_t t = first; t < scratch.touched.size(); ++t) {
            const auto p = scratch.touched[t];
            const double sc = l2 ? scratch.score[p] + (total_pen - scratch.aux[p])
                                 : scratch.score[p] + probes[j].coarse;
            out.emplace_back(p, sc);
        }
    }
    if (ops) ops->accumulations += acc;
    return out;
}

std::vector<Candidate> score_hitcount(const L2Lut& lut, std::span<const Probe> probes,
                                      const Index& index, SearchMode mode,
                                      SearchScratch& scratch, OpCounts* ops) {
    if (mode == SearchMode::Exact)
        throw std::invalid_argument("score_hitcount: mode must be L or M");
    const std::size_t n_sub = index.n_sub();
    const double base = mode == SearchMode::HitCountPenalty ? -static_cast<double>(n_sub) : 0.0;
    scratch.next_epoch();
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < probes.size(); ++j) {
        const auto c = probes[j].cluster;
        for (auto p : index.members[c]) scratch.touch(p, base);
        for (std::size_t s = 0; s < n_sub; ++s) {
            for (const auto& item : lut.list(j, s)) {
                const double inc =
                        mode == SearchMode::HitCountPenalty && item.inner ? 2.0 : 1.0;
                for (auto p : index.inv.list(c, s, item.entry)) {
                    scratch.score[p] += inc;
                    ++acc;
                }
            }
        }
    }
    std::vector<Candidate> out;
    out.reserve(scratch.touched.size());
    for (auto p : scratch.touched) out.emplace_back(p, scratch.score[p]);
    if (ops) ops->accumulations += acc;
    return out;
}

std::vector<Candidate> rescore_exact(std::span<const idx_t> ids, const L2Lut& lut,
                                     std::span<const Probe> probes, const Index& index,
                                     OpCounts* ops) {
    const std::size_t n_sub = index.n_sub();
    const bool l2 = index.metric == Metric::L2;
    std::vector<Candidate> out;
    out.reserve(ids.size());
    for (auto id : ids) {
        const auto c = static_cast<std::uint32_t>(index.ivf.labels[static_cast<std::size_t>(id)]);
        std::size_t j = 0;
        while (j < probes.size() && probes[j].cluster != c) ++j;
        if (j == probes.size())
            throw std::invalid_argument("rescore_exact: point is not in a probed cluster");
        double sum = 0.0, matched_pen = 0.0, total_pen = 0.0;
        for (std::size_t s = 0; s < n_sub; ++s) {
            const double r = lut.r_eff[j * n_sub + s];
            const double pen = l2 ? r * r : 0.0;
            total_pen += pen;
            const std::uint32_t e = index.codes[static_cast<std::size_t>(id) * n_sub + s];
            const auto list = lut.list(j, s);
            const auto it = std::lower_bound(list.begin(), list.end(), e,
                                             [](const LutItem& a, std::uint32_t v) {
                                                 return a.entry < v;
                                             });
            if (it != list.end() && it->entry == e) {
                sum += l2 ? it->value * it->value : it->value;
                matched_pen += pen;
            }
        }
        if (ops) ops->accumulations += n_sub;
        out.emplace_back(id, l2 ? sum + (total_pen - matched_pen) : sum + probes[j].coarse);
    }
    return out;
}

QueryResult select_topk(std::span<const Candidate> scores, std::size_t k, Order order) {
    TopK<double> top(k, order);
    for (const auto& [id, sc] : scores) top.push(id, sc);
    QueryResult r;
    for (const auto& it : top.take_sorted()) {
        r.ids.push_back(it.id);
        r.scores.push_back(it.score);
    }
    r.underfull = r.ids.size() < k;
    return r;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t ns_between(Clock::time_point a, Clock::time_point b) {
    return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

void validate(const Index& index, const SearchParams& params) {
    if (params.nprobs == 0 || params.nprobs > index.ivf.c)
        throw std::invalid_argument("nprobs must be in [1, C]");
    if (params.k == 0) throw std::invalid_argument("k must be at least 1");
    if (!(params.thres_scale > 0.0)) throw std::invalid_argument("thres_scale must be positive");
    if (params.ip_floor && !std::isfinite(*params.ip_floor))
        throw std::invalid_argument("ip_floor must be finite");
}

} // namespace

QueryResult search_one(std::span<const float> query, const Index& index,
                       const SearchParams& params, SearchScratch& scratch) {
    validate(index, params);
    if (scratch.score.size() != index.n) scratch.reset(index.n);
    OpCounts ops;
    const auto t0 = Clock::now();
    const auto probes = filter_clusters(query, index.ivf, index.metric, params.nprobs);
    const auto t1 = Clock::now();
    const L2Lut lut = build_selective_lut(query, probes, index, params, scratch, &ops);
    const auto t2 = Clock::now();
    const Order metric_order =
            index.metric == Metric::L2 ? Order::Ascending : Order::Descending;
    QueryResult r;
    if (params.mode == SearchMode::Exact) {
        const auto cands = accumulate_exact(lut, probes, index, scratch, &ops);
        r = select_topk(cands, params.k, metric_order);
    } else {
        const auto cands = score_hitcount(lut, probes, index, params.mode, scratch, &ops);
        if (params.mode == SearchMode::HitCountPenalty && params.rerank) {
            const auto pool = select_topk(cands, 4 * params.k, Order::Descending);
            const auto exact = rescore_exact(pool.ids, lut, probes, index, &ops);
            r = select_topk(exact, params.k, metric_order);
        } else {
            r = select_topk(cands, params.k, Order::Descending);
        }
    }
    const auto t3 = Clock::now();
    r.timings = {ns_between(t0, t1), ns_between(t1, t2), ns_between(t2, t3)};
    r.ops = ops;
    return r;
}

std::vector<QueryResult> search_batch(const Dataset& queries, const Index& index,
                                      const SearchParams& params) {
    validate(index, params);
    if (queries.n() == 0) return {};
    if (queries.metric() != index.metric)
        throw std::invalid_argument("search_batch: query metric does not match the index");
    const Dataset q = index.prepare_queries(queries);
    std::vector<QueryResult> results(q.n());
    const int threads = params.threads > 0 ? params.threads : omp_get_max_threads();
    const auto nq = static_cast<std::int64_t>(q.n());
    std::exception_ptr failure;
#pragma omp parallel num_threads(threads)
    {
        SearchScratch scratch(index.n);
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t qi = 0; qi < nq; ++qi) {
            try {
                results[static_cast<std::size_t>(qi)] =
                        search_one(q.row(static_cast<std::size_t>(qi)), index, params, scratch);
            } catch (...) {
#pragma omp critical(raylut_search_failure)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace raylut
