#include "raylut/reference.h"

#include <algorithm>
#include <stdexcept>

#include "raylut/kernels.h"
#include "raylut/search.h"
#include "raylut/topk.h"

namespace raylut {

NeighborTable brute_force_topk(const Dataset& base, const Dataset& queries, Metric metric,
                               std::size_t k) {
    if (queries.n() > 0 && base.d() != queries.d())
        throw std::invalid_argument("brute_force_topk: dimension mismatch");
    if (k > base.n()) throw std::invalid_argument("brute_force_topk: k exceeds base size");
    const auto& kt = kernels::active();
    const std::size_t d = base.d();
    std::vector<double> base_norms(base.n());
    for (std::size_t i = 0; i < base.n(); ++i)
        base_norms[i] = kt.dot_f32(base.row(i).data(), base.row(i).data(), d);

    NeighborTable out;
    out.q_count = queries.n();
    out.k = k;
    out.ids.resize(queries.n() * k);
    out.scores.resize(queries.n() * k);
    const Order order = metric == Metric::L2 ? Order::Ascending : Order::Descending;
    const auto nq = static_cast<std::int64_t>(queries.n());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t qi = 0; qi < nq; ++qi) {
        const auto q = queries.row(static_cast<std::size_t>(qi));
        const double qn = kt.dot_f32(q.data(), q.data(), d);
        TopK<double> top(k, order);
        for (std::size_t i = 0; i < base.n(); ++i) {
            const double ip = kt.dot_f32(base.row(i).data(), q.data(), d);
            const double sc =
                    metric == Metric::L2 ? std::max(0.0, base_norms[i] - 2.0 * ip + qn) : ip;
            top.push(static_cast<idx_t>(i), sc);
        }
        const auto items = top.take_sorted();
        for (std::size_t j = 0; j < k; ++j) {
            out.ids[static_cast<std::size_t>(qi) * k + j] = items[j].id;
            out.scores[static_cast<std::size_t>(qi) * k + j] = static_cast<float>(items[j].score);
        }
    }
    return out;
}

DenseLut dense_lut(std::span<const double> residuals, std::size_t nprobs,
                   const Codebook& codebook, Metric metric) {
    const std::size_t d = codebook.n_sub * kSubspaceDim;
    if (residuals.size() != nprobs * d)
        throw std::invalid_argument("dense_lut: residual size mismatch");
    const auto& kt = kernels::active();
    DenseLut lut;
    lut.nprobs = nprobs;
    lut.n_sub = codebook.n_sub;
    lut.entries = codebook.e;
    lut.values.resize(nprobs * codebook.n_sub * codebook.e);
    for (std::size_t j = 0; j < nprobs; ++j) {
        for (std::size_t s = 0; s < codebook.n_sub; ++s) {
            const double rx = residuals[j * d + 2 * s];
            const double ry = residuals[j * d + 2 * s + 1];
            double* out = lut.values.data() + (j * codebook.n_sub + s) * codebook.e;
            if (metric == Metric::L2)
                kt.dense_lut_l2(rx, ry, codebook.xs(s), codebook.ys(s), codebook.e, out);
            else
                kt.dense_lut_ip(rx, ry, codebook.xs(s), codebook.ys(s), codebook.e, out);
        }
    }
    return lut;
}

std::vector<RankedList> ivfpq_reference_search(const Dataset& queries, const Index& index,
                                               std::size_t nprobs, std::size_t k) {
    if (nprobs == 0 || nprobs > index.ivf.c)
        throw std::invalid_argument("ivfpq_reference_search: nprobs must be in [1, C]");
    if (queries.n() == 0) return {};
    const Dataset q = index.prepare_queries(queries);
    const auto& kt = kernels::active();
    const std::size_t n_sub = index.n_sub();
    const Order order = index.metric == Metric::L2 ? Order::Ascending : Order::Descending;
    std::vector<RankedList> results(q.n());
    const auto nq = static_cast<std::int64_t>(q.n());
#pragma omp parallel
    {
        std::vector<double> residuals;
        std::vector<double> scores;
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t qi = 0; qi < nq; ++qi) {
            const auto probes =
                    filter_clusters(q.row(static_cast<std::size_t>(qi)), index.ivf, index.metric,
                                    nprobs);
            residuals.clear();
            for (const auto& p : probes)
                residuals.insert(residuals.end(), p.residual.begin(), p.residual.end());
            const DenseLut lut = dense_lut(residuals, probes.size(), index.codebook, index.metric);
            TopK<double> top(k, order);
            for (std::size_t j = 0; j < probes.size(); ++j) {
                const auto c = probes[j].cluster;
                const auto& members = index.members[c];
                scores.resize(members.size());
                kt.pq_scan(lut.table(j), lut.entries, index.cluster_codes[c].data(), n_sub,
                           members.size(), scores.data());
                for (std::size_t m = 0; m < members.size(); ++m) {
                    const double sc = index.metric == Metric::L2 ? scores[m]
                                                                 : scores[m] + probes[j].coarse;
                    top.push(members[m], sc);
                }
            }
            auto& out = results[static_cast<std::size_t>(qi)];
            for (const auto& it : top.take_sorted()) {
                out.ids.push_back(it.id);
                out.scores.push_back(it.score);
            }
        }
    }
    return results;
}

} // namespace raylut
