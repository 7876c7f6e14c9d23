#include "raylut/trainer.h"

#include <limits>
#include <stdexcept>

#include "raylut/kernels.h"
#include "raylut/kmeans.h"

namespace raylut {

Codebook::Codebook(std::size_t n_sub_, std::size_t e_, std::vector<double> entries_)
        : n_sub(n_sub_), m(kSubspaceDim), e(e_), entries(std::move(entries_)) {
    if (entries.size() != n_sub * e * m) throw std::invalid_argument("codebook size mismatch");
    ex.resize(n_sub * e);
    ey.resize(n_sub * e);
    for (std::size_t i = 0; i < n_sub * e; ++i) {
        ex[i] = entries[2 * i];
        ey[i] = entries[2 * i + 1];
    }
}

InvertedMap::InvertedMap(std::size_t c, std::size_t n_sub, std::size_t e,
                         std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> ids)
        : c_(c), n_sub_(n_sub), e_(e), offsets_(std::move(offsets)), ids_(std::move(ids)) {
    if (offsets_.size() != c_ * n_sub_ * e_ + 1 || offsets_.back() != ids_.size())
        throw std::invalid_argument("inverted map offsets inconsistent");
}

void finalize_ivf(IvfModel& ivf) {
    const auto& k = kernels::active();
    ivf.sq_norms.resize(ivf.c);
    for (std::size_t j = 0; j < ivf.c; ++j) {
        const float* p = ivf.centroids.data() + j * ivf.d;
        ivf.sq_norms[j] = k.dot_f32(p, p, ivf.d);
    }
}

IvfModel train_ivf(const Dataset& points, std::size_t c, std::size_t max_iters,
                   std::uint64_t seed) {
    std::vector<double> pts(points.data().begin(), points.data().end());
    auto km = lloyd_kmeans(pts, points.d(), c, max_iters, seed);
    IvfModel ivf;
    ivf.c = c;
    ivf.d = points.d();
    ivf.centroids.assign(km.centroids.begin(), km.centroids.end());
    ivf.labels.resize(points.n());
    for (std::size_t i = 0; i < points.n(); ++i) ivf.labels[i] = km.labels[i];
    finalize_ivf(ivf);
    return ivf;
}

std::vector<double> compute_residuals(const Dataset& points, const IvfModel& ivf) {
    if (points.d() != ivf.d || points.n() != ivf.labels.size())
        throw std::invalid_argument("compute_residuals: shape mismatch");
    const std::size_t d = ivf.d;
    std::vector<double> res(points.n() * d);
    for (std::size_t i = 0; i < points.n(); ++i) {
        const auto lab = ivf.labels[i];
        if (lab < 0 || static_cast<std::size_t>(lab) >= ivf.c)
            throw std::invalid_argument("compute_residuals: label out of range");
        const float* c = ivf.centroids.data() + static_cast<std::size_t>(lab) * d;
        const auto row = points.row(i);
        for (std::size_t j = 0; j < d; ++j)
            res[i * d + j] = static_cast<double>(row[j]) - static_cast<double>(c[j]);
    }
    return res;
}

Codebook train_codebooks(std::span<const double> residuals, std::size_t d, std::size_t m,
                         std::size_t e, std::uint64_t seed, std::size_t max_iters) {
    if (m != kSubspaceDim) throw std::invalid_argument("only 2-dimensional subspaces are supported");
    if (d == 0 || d % m != 0)
        throw std::invalid_argument("dimension not divisible by subspace width (pad first)");
    if (residuals.size() % d != 0) throw std::invalid_argument("residuals ragged");
    if (e == 0 || e > 65536) throw std::invalid_argument("entry count must be in [1, 65536]");
    const std::size_t n = residuals.size() / d;
    if (e > n) throw std::invalid_argument("more entries than points");
    const std::size_t n_sub = d / m;

    std::vector<double> entries(n_sub * e * m);
    for (std::size_t s = 0; s < n_sub; ++s) {
        std::vector<double> proj(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            proj[2 * i] = residuals[i * d + 2 * s];
            proj[2 * i + 1] = residuals[i * d + 2 * s + 1];
        }
        auto km = lloyd_kmeans(proj, m, e, max_iters, seed + 1000003ULL * (s + 1));
        std::copy(km.centroids.begin(), km.centroids.end(), entries.begin() + s * e * m);
    }
    return Codebook(n_sub, e, std::move(entries));
}

std::uint32_t assign_entry(double x, double y, const Codebook& cb, std::size_t s) {
    if (s >= cb.n_sub) throw std::out_of_range("assign_entry: subspace out of range");
    const double* xs = cb.xs(s);
    const double* ys = cb.ys(s);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t k = 0; k < cb.e; ++k) {
        const double dx = x - xs[k];
        const double dy = y - ys[k];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
            best = d2;
            arg = static_cast<std::uint32_t>(k);
        }
    }
    return arg;
}

std::vector<std::uint16_t> encode(std::span<const double> residuals, const Codebook& cb) {
    const std::size_t d = cb.n_sub * cb.m;
    if (residuals.size() % d != 0) throw std::invalid_argument("encode: shape mismatch");
    const std::size_t n = residuals.size() / d;
    std::vector<std::uint16_t> codes(n * cb.n_sub);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t s = 0; s < cb.n_sub; ++s)
            codes[i * cb.n_sub + s] = static_cast<std::uint16_t>(
                    assign_entry(residuals[i * d + 2 * s], residuals[i * d + 2 * s + 1], cb, s));
    }
    return codes;
}

InvertedMap build_inverted_map(std::span<const std::uint16_t> codes, const IvfModel& ivf,
                               const Codebook& cb) {
    const std::size_t n = ivf.labels.size();
    const std::size_t n_sub = cb.n_sub;
    if (codes.size() != n * n_sub) throw std::invalid_argument("inverted map: shape mismatch");
    const std::size_t lists = ivf.c * n_sub * cb.e;
    std::vector<std::uint64_t> offsets(lists + 1, 0);
    auto key = [&](std::size_t i, std::size_t s) {
        return (static_cast<std::size_t>(ivf.labels[i]) * n_sub + s) * cb.e +
               codes[i * n_sub + s];
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < n_sub; ++s) ++offsets[key(i, s) + 1];
    for (std::size_t k = 0; k < lists; ++k) offsets[k + 1] += offsets[k];
    std::vector<std::uint32_t> ids(offsets.back());
    std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
    // ascending i keeps every list sorted
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < n_sub; ++s)
            ids[cursor[key(i, s)]++] = static_cast<std::uint32_t>(i);
    return InvertedMap(ivf.c, n_sub, cb.e, std::move(offsets), std::move(ids));
}

InvertedMap build_inverted_map(std::span<const double> residuals, const IvfModel& ivf,
                               const Codebook& cb) {
    return build_inverted_map(encode(residuals, cb), ivf, cb);
}

} // namespace raylut
