#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "raylut/metrics.h"
#include "raylut/threshold.h"
#include "util.h"

using namespace raylut;

TEST_CASE("uniform grid on cell centers gives equal densities") {
    // residual rows of width 2, one subspace
    std::vector<double> res;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            res.push_back((i + 0.5) / 100.0);
            res.push_back((j + 0.5) / 100.0);
        }
    const auto m = build_density_map(res, 2, 0);
    for (auto c : m.counts) CHECK(c == 1);
    for (double v : m.density) CHECK(v == doctest::Approx(m.density[0]));
    CHECK(m.density[0] > 0.0);
}

TEST_CASE("all mass in one cell") {
    const std::vector<double> res(2 * 37, 0.25);
    const auto m = build_density_map(res, 2, 0);
    const double area = m.cell_w() * m.cell_h();
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < m.counts.size(); ++k) {
        if (m.counts[k] == 0) {
            CHECK(m.density[k] == 0.0);
            continue;
        }
        ++nonzero;
        CHECK(m.counts[k] == 37);
        CHECK(m.density[k] == doctest::Approx(37 / area));
    }
    CHECK(nonzero == 1);
    CHECK(density_at(m, 0.25, 0.25) == doctest::Approx(37 / area));
}

TEST_CASE("counts are conserved and lookups follow the cell arithmetic") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    const std::size_t n = 5000, d = 6;
    std::vector<double> res(n * d);
    for (auto& v : res) v = g(rng);
    for (std::size_t s = 0; s < 3; ++s) {
        const auto m = build_density_map(res, d, s);
        CHECK(std::accumulate(m.counts.begin(), m.counts.end(), std::uint64_t{0}) == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(m.min_x < res[i * d + 2 * s]);
            CHECK(m.max_y > res[i * d + 2 * s + 1]);
        }
        std::uniform_real_distribution<double> u(-4, 4);
        for (int t = 0; t < 100; ++t) {
            const double x = u(rng), y = u(rng);
            auto idx = [&](double v, double lo, double w) {
                const long f = static_cast<long>(std::floor((v - lo) / w));
                return static_cast<std::size_t>(std::clamp(f, 0L, 99L));
            };
            const std::size_t ix = idx(x, m.min_x, m.cell_w()), iy = idx(y, m.min_y, m.cell_h());
            CHECK(density_at(m, x, y) == m.density[ix * 100 + iy]);
        }
        // far outside clamps to the corner cells
        CHECK(density_at(m, -1e9, -1e9) == m.density[0]);
        CHECK(density_at(m, 1e9, 1e9) == m.density[99 * 100 + 99]);
        CHECK(density_at(m, -1e9, 1e9) == m.density[99]);
        const double cx = (m.min_x + m.max_x) / 2, cy = (m.min_y + m.max_y) / 2;
        CHECK(density_at(m, cx, cy) == m.density[50 * 100 + 50]);
    }
}

TEST_CASE("fit_poly recovers an exact cubic") {
    const std::vector<double> c{0.5, -1.25, 0.75, 0.1};
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
        const double x = -2.0 + 0.1 * i;
        xs.push_back(x);
        ys.push_back(c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x);
    }
    const auto m = fit_poly(xs, ys, 3);
    const auto raw = m.raw_coefficients();
    REQUIRE(raw.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(raw[k] == doctest::Approx(c[k]).epsilon(1e-6));
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(predict_threshold(m, xs[i]) == doctest::Approx(ys[i]).epsilon(1e-6));
}

TEST_CASE("fit_poly on constant targets") {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6}, ys(6, 0.7);
    const auto m = fit_poly(xs, ys, 3);
    const auto raw = m.raw_coefficients();
    CHECK(std::abs(raw[0] - 0.7) <= 1e-9);
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(raw[k]) <= 1e-9);
    CHECK(predict_threshold(m, 100.0) == doctest::Approx(0.7));
}

TEST_CASE("fit_poly beats the constant predictor on noisy data") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    std::normal_distribution<double> noise(0, 0.3);
    std::vector<double> xs, ys;
    for (int i = 0; i < 500; ++i) {
        const double x = u(rng);
        xs.push_back(x);
        ys.push_back(2.0 / (1.0 + x) + noise(rng));
    }
    const auto m = fit_poly(xs, ys, 3);
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / 500;
    double fit = 0, base = 0;
    const auto raw = m.raw_coefficients();
    for (std::size_t i = 0; i < 500; ++i) {
        double p = 0;
        for (std::size_t k = 4; k-- > 0;) p = p * xs[i] + raw[k];
        fit += (p - ys[i]) * (p - ys[i]);
        base += (mean - ys[i]) * (mean - ys[i]);
    }
    CHECK(fit <= base);
}

TEST_CASE("fit_poly argument errors") {
    const std::vector<double> xs{1, 2, 3}, ys{1, 2, 3};
    CHECK_THROWS_AS(fit_poly(xs, ys, 3), std::invalid_argument);
    CHECK_THROWS_AS(fit_poly(xs, std::vector<double>{1, 2}, 1), std::invalid_argument);
}

TEST_CASE("predictions stay within the training range") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
        xs.push_back(u(rng));
        ys.push_back(0.1 + u(rng));
    }
    const auto m = fit_poly(xs, ys, 3);
    CHECK(m.t_min > 0.0);
    CHECK(m.t_min <= m.t_max);
    std::uniform_real_distribution<double> wide(-1e6, 1e6);
    for (int t = 0; t < 1000; ++t) {
        const double p = predict_threshold(m, wide(rng));
        CHECK(p >= m.t_min);
        CHECK(p <= m.t_max);
    }
    for (double x : {INFINITY, -INFINITY, NAN}) {
        const double p = predict_threshold(m, x);
        CHECK(std::isfinite(p));
        CHECK((p == m.t_min || p == m.t_max));
    }
}

TEST_CASE("training pairs need more than 100 points") {
    const auto ds = raylut::testing::random_dataset(100, 4, 4);
    const auto ivf = train_ivf(ds, 1, 25, 1);
    const auto res = compute_residuals(ds, ivf);
    std::vector<DensityMap> maps{build_density_map(res, 4, 0), build_density_map(res, 4, 1)};
    CHECK_THROWS_AS(sample_training_pairs(ds, ivf, res, maps, 10, 1), std::invalid_argument);
}

TEST_CASE("coincident neighbors give zero thresholds") {
    const Dataset ds(101, 4, std::vector<float>(101 * 4, 0.5f));
    const auto ivf = train_ivf(ds, 1, 25, 1);
    const auto res = compute_residuals(ds, ivf);
    std::vector<DensityMap> maps{build_density_map(res, 4, 0), build_density_map(res, 4, 1)};
    const auto tp = sample_training_pairs(ds, ivf, res, maps, 1, 5);
    REQUIRE(tp.thresholds.size() == 2);
    for (const auto& t : tp.thresholds) {
        REQUIRE(t.size() == 1);
        CHECK(t[0] == 0.0);
    }
}

TEST_CASE("density and threshold are negatively correlated") {
    const auto ds = gen_synthetic(6000, 16, 32, 0.05, 5);
    const auto ivf = train_ivf(ds, 32, 25, 1);
    const auto res = compute_residuals(ds, ivf);
    ThresholdTrainOptions opts;
    opts.sample_n = 300;
    opts.seed = 6;
    TrainingPairs tp;
    const auto model = train_threshold_model(ds, ivf, res, opts, &tp);
    REQUIRE(model.polys.size() == 8);
    CHECK(tp.sample_ids.size() == 300);
    for (std::size_t s = 0; s < 8; ++s) {
        for (double t : tp.thresholds[s]) CHECK(t >= 0.0);
        CHECK(spearman(tp.densities[s], tp.thresholds[s]) < 0.0);
        CHECK(model.thresholds_max[s] ==
              *std::max_element(tp.thresholds[s].begin(), tp.thresholds[s].end()));
    }

    // with the training profiles the largest threshold holds every neighbor
    const auto profiles = profile_pseudo_queries(ds, ivf, res, model.maps, tp.sample_ids);
    CHECK(retention_at_scale(model, profiles, 1e9) == 1.0);
    CHECK(retention_at_scale(model, profiles, 0.0) == 0.0);
    const double r05 = retention_at_scale(model, profiles, 0.5);
    const double r10 = retention_at_scale(model, profiles, 1.0);
    CHECK(r05 <= r10);
}

TEST_CASE("sample_ids is seeded, sorted and respects exclusions") {
    const auto a = sample_ids(1000, 100, 9);
    CHECK(a == sample_ids(1000, 100, 9));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    const auto b = sample_ids(1000, 200, 10, a);
    for (auto id : b) CHECK_FALSE(std::binary_search(a.begin(), a.end(), id));
    CHECK_THROWS_AS(sample_ids(10, 11, 1), std::invalid_argument);
}
