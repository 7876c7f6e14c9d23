#include "raylut/threshold.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "raylut/reference.h"

namespace raylut {

std::pair<std::size_t, std::size_t> DensityMap::cell(double x, double y) const {
    auto index = [this](double v, double lo, double width) -> std::size_t {
        const double f = std::floor((v - lo) / width);
        if (!(f > 0.0)) return 0; // also catches NaN
        return std::min(static_cast<std::size_t>(f), grid - 1);
    };
    return {index(x, min_x, cell_w()), index(y, min_y, cell_h())};
}

DensityMap build_density_map(std::span<const double> residuals, std::size_t d, std::size_t s,
                             std::size_t grid) {
    if (grid == 0) throw std::invalid_argument("density grid must be positive");
    if (d == 0 || residuals.size() < d || residuals.size() % d != 0 || 2 * s + 1 >= d)
        throw std::invalid_argument("build_density_map: need >= 1 projection in range");
    const std::size_t n = residuals.size() / d;
    DensityMap m;
    m.grid = grid;
    m.min_x = m.min_y = INFINITY;
    m.max_x = m.max_y = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = residuals[i * d + 2 * s], y = residuals[i * d + 2 * s + 1];
        m.min_x = std::min(m.min_x, x);
        m.max_x = std::max(m.max_x, x);
        m.min_y = std::min(m.min_y, y);
        m.max_y = std::max(m.max_y, y);
    }
    constexpr double kExpand = 1e-9;
    m.min_x -= kExpand;
    m.min_y -= kExpand;
    m.max_x += kExpand;
    m.max_y += kExpand;

    m.counts.assign(grid * grid, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [ix, iy] = m.cell(residuals[i * d + 2 * s], residuals[i * d + 2 * s + 1]);
        ++m.counts[ix * grid + iy];
    }
    const double area = m.cell_w() * m.cell_h();
    m.density.resize(grid * grid);
    for (std::size_t k = 0; k < grid * grid; ++k) m.density[k] = m.counts[k] / area;
    return m;
}

double density_at(const DensityMap& map, double x, double y) {
    const auto [ix, iy] = map.cell(x, y);
    return map.density[ix * map.grid + iy];
}

std::vector<double> PolyModel::raw_coefficients() const {
    // sum_k a_k ((x - mu) / sigma)^k expanded with the binomial theorem
    std::vector<double> raw(degree + 1, 0.0);
    for (std::size_t k = 0; k <= degree; ++k) {
        const double ak = coefficients[k] / std::pow(x_scale, static_cast<double>(k));
        double binom = 1.0;
        for (std::size_t j = 0; j <= k; ++j) {
            raw[j] += ak * binom * std::pow(-x_shift, static_cast<double>(k - j));
            binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        }
    }
    return raw;
}

PolyModel fit_poly(std::span<const double> xs, std::span<const double> ys, std::size_t degree) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_poly: xs/ys length mismatch");
    const std::size_t n = xs.size();
    if (n < degree + 1) throw std::invalid_argument("fit_poly: fewer samples than coefficients");

    PolyModel m;
    m.degree = degree;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    m.x_shift = mean;
    m.x_scale = sd > 0.0 ? sd : 1.0;

    const auto cols = static_cast<Eigen::Index>(degree + 1);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), cols);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (xs[i] - m.x_shift) / m.x_scale;
        double p = 1.0;
        for (Eigen::Index k = 0; k < cols; ++k) {
            a(static_cast<Eigen::Index>(i), k) = p;
            p *= z;
        }
        b(static_cast<Eigen::Index>(i)) = ys[i];
    }
    Eigen::MatrixXd ata = a.transpose() * a;
    ata.diagonal().array() += kRidge;
    const Eigen::VectorXd coef = ata.ldlt().solve(a.transpose() * b);
    m.coefficients.assign(coef.data(), coef.data() + coef.size());

    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    // predictions feed a sphere radius, which must stay positive
    constexpr double kFloor = 1e-12;
    m.t_min = std::max(*lo, kFloor);
    m.t_max = std::max(*hi, m.t_min);
    return m;
}

double predict_threshold(const PolyModel& m, double density) {
    if (std::isnan(density)) return m.t_max;
    if (std::isinf(density)) {
        // sign of the polynomial at +/-inf follows its leading nonzero term
        std::size_t k = m.coefficients.size();
        while (k > 0 && m.coefficients[k - 1] == 0.0) --k;
        if (k == 0) return m.t_min;
        double sign = m.coefficients[k - 1];
        if (density < 0 && (k - 1) % 2 == 1) sign = -sign;
        return sign > 0 ? m.t_max : m.t_min;
    }
    const double z = (density - m.x_shift) / m.x_scale;
    double v = 0.0;
    for (std::size_t k = m.coefficients.size(); k-- > 0;) v = v * z + m.coefficients[k];
    if (std::isnan(v)) return m.t_max;
    return std::clamp(v, m.t_min, m.t_max);
}

std::vector<std::uint32_t> sample_ids(std::size_t n, std::size_t sample_n, std::uint64_t seed,
                                      std::span<const std::uint32_t> exclude) {
    std::vector<char> banned(n, 0);
    for (auto e : exclude)
        if (e < n) banned[e] = 1;
    std::vector<std::uint32_t> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!banned[i]) pool.push_back(static_cast<std::uint32_t>(i));
    if (sample_n > pool.size()) throw std::invalid_argument("sample larger than population");
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < sample_n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(sample_n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<PseudoQueryProfile> profile_pseudo_queries(const Dataset& base, const IvfModel& ivf,
                                                       std::span<const double> residuals,
                                                       const std::vector<DensityMap>& maps,
                                                       std::span<const std::uint32_t> ids,
                                                       std::size_t top_k) {
    const std::size_t n = base.n();
    const std::size_t d = base.d();
    const std::size_t n_sub = d / kSubspaceDim;
    if (n < top_k + 1) throw std::invalid_argument("pseudo-query profiling needs N > top_k");
    if (maps.size() != n_sub) throw std::invalid_argument("one density map per subspace");

    std::vector<float> qdata;
    qdata.reserve(ids.size() * d);
    for (auto id : ids) {
        const auto r = base.row(id);
        qdata.insert(qdata.end(), r.begin(), r.end());
    }
    Dataset queries(ids.size(), d, std::move(qdata));
    const NeighborTable nn = brute_force_topk(base, queries, Metric::L2, top_k + 1);

    std::vector<PseudoQueryProfile> out(ids.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(ids.size()); ++qi) {
        const auto q = static_cast<std::size_t>(qi);
        auto& pr = out[q];
        pr.id = ids[q];
        std::vector<std::uint32_t> neigh;
        for (auto id : nn.row_ids(q))
            if (static_cast<std::uint32_t>(id) != pr.id && neigh.size() < top_k)
                neigh.push_back(static_cast<std::uint32_t>(id));

        pr.density.resize(n_sub);
        pr.threshold.resize(n_sub);
        pr.distances.resize(n_sub * top_k);
        const auto qrow = base.row(pr.id);
        for (std::size_t s = 0; s < n_sub; ++s) {
            pr.density[s] = density_at(maps[s], residuals[pr.id * d + 2 * s],
                                       residuals[pr.id * d + 2 * s + 1]);
            double mx = 0.0;
            for (std::size_t j = 0; j < top_k; ++j) {
                const std::uint32_t p = neigh[j];
                const float* cp =
                        ivf.centroids.data() + static_cast<std::size_t>(ivf.labels[p]) * d;
                const double qx = static_cast<double>(qrow[2 * s]) - cp[2 * s];
                const double qy = static_cast<double>(qrow[2 * s + 1]) - cp[2 * s + 1];
                const double dx = qx - residuals[p * d + 2 * s];
                const double dy = qy - residuals[p * d + 2 * s + 1];
                const double dist = std::sqrt(dx * dx + dy * dy);
                pr.distances[s * top_k + j] = dist;
                mx = std::max(mx, dist);
            }
            pr.threshold[s] = mx;
        }
    }
    return out;
}

TrainingPairs sample_training_pairs(const Dataset& base, const IvfModel& ivf,
                                    std::span<const double> residuals,
                                    const std::vector<DensityMap>& maps, std::size_t sample_n,
                                    std::uint64_t seed) {
    if (base.n() < kThresholdTopK + 1)
        throw std::invalid_argument("threshold training needs at least 101 points");
    if (sample_n > base.n()) throw std::invalid_argument("sample_n > N");
    TrainingPairs tp;
    tp.sample_ids = sample_ids(base.n(), sample_n, seed);
    const auto profiles = profile_pseudo_queries(base, ivf, residuals, maps, tp.sample_ids);
    const std::size_t n_sub = maps.size();
    tp.densities.assign(n_sub, {});
    tp.thresholds.assign(n_sub, {});
    for (const auto& pr : profiles)
        for (std::size_t s = 0; s < n_sub; ++s) {
            tp.densities[s].push_back(pr.density[s]);
            tp.thresholds[s].push_back(pr.threshold[s]);
        }
    return tp;
}

ThresholdModel train_threshold_model(const Dataset& base, const IvfModel& ivf,
                                     std::span<const double> residuals,
                                     const ThresholdTrainOptions& opts,
                                     TrainingPairs* pairs_out) {
    const std::size_t d = base.d();
    const std::size_t n_sub = d / kSubspaceDim;
    ThresholdModel model;
    model.maps.resize(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) model.maps[s] = build_density_map(residuals, d, s);

    const std::size_t sample_n = std::min(opts.sample_n, base.n());
    auto tp = sample_training_pairs(base, ivf, residuals, model.maps, sample_n, opts.seed);
    const std::size_t degree = std::min(opts.degree, sample_n > 0 ? sample_n - 1 : 0);
    model.polys.resize(n_sub);
    model.thresholds_max.resize(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
        model.polys[s] = fit_poly(tp.densities[s], tp.thresholds[s], degree);
        model.thresholds_max[s] = model.polys[s].t_max;
    }
    if (pairs_out) *pairs_out = std::move(tp);
    return model;
}

double retention_at_scale(const ThresholdModel& model,
                          std::span<const PseudoQueryProfile> profiles, double scale) {
    double total = 0.0;
    std::size_t terms = 0;
    for (const auto& pr : profiles) {
        const std::size_t n_sub = pr.threshold.size();
        const std::size_t k = pr.distances.size() / n_sub;
        for (std::size_t s = 0; s < n_sub; ++s) {
            const double thr = predict_threshold(model.polys[s], pr.density[s]) * scale;
            std::size_t kept = 0;
            for (std::size_t j = 0; j < k; ++j) kept += pr.distances[s * k + j] < thr;
            total += static_cast<double>(kept) / static_cast<double>(k);
            ++terms;
        }
    }
    return terms ? total / static_cast<double>(terms) : 0.0;
}

} // namespace raylut
