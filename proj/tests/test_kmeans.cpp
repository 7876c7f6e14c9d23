#include <doctest.h>

#include <algorithm>
#include <random>

#include "raylut/kmeans.h"

using namespace raylut;

namespace {

double sse_of(const std::vector<double>& pts, std::size_t dim, const KMeansResult& r) {
    double s = 0;
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = pts[i * dim + j] - r.centroids[static_cast<std::size_t>(r.labels[i]) * dim + j];
            s += d * d;
        }
    return s;
}

} // namespace

TEST_CASE("two well separated pairs in 1-D") {
    const std::vector<double> pts{0, 1, 10, 11};
    const auto r = lloyd_kmeans(pts, 1, 2, 25, 3);
    std::vector<double> c = r.centroids;
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(10.5));
    CHECK(r.labels[0] == r.labels[1]);
    CHECK(r.labels[2] == r.labels[3]);
    CHECK(r.labels[0] != r.labels[2]);
    // the optimum among all 2-partitions of sorted 1-D points
    double best = 1e300;
    for (std::size_t cut = 1; cut < 4; ++cut) {
        double s = 0;
        for (auto [lo, hi] : {std::pair<std::size_t, std::size_t>{0, cut}, {cut, 4}}) {
            double m = 0;
            for (std::size_t i = lo; i < hi; ++i) m += pts[i];
            m /= static_cast<double>(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) s += (pts[i] - m) * (pts[i] - m);
        }
        best = std::min(best, s);
    }
    CHECK(sse_of(pts, 1, r) == doctest::Approx(best));
}

TEST_CASE("k = n puts every point on its own centroid") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> pts(40);
    for (auto& v : pts) v = u(rng);
    const auto r = lloyd_kmeans(pts, 2, 20, 25, 1);
    CHECK(sse_of(pts, 2, r) == 0.0);
    std::vector<std::int32_t> l = r.labels;
    std::sort(l.begin(), l.end());
    CHECK(std::adjacent_find(l.begin(), l.end()) == l.end());
}

TEST_CASE("k = 1 gives the mean") {
    const std::vector<double> pts{1, 2, 3, 4, 5, 9};
    const auto r = lloyd_kmeans(pts, 2, 1, 25, 1);
    CHECK(r.centroids[0] == doctest::Approx(3.0));
    CHECK(r.centroids[1] == doctest::Approx(5.0));
}

TEST_CASE("SSE never increases and the result is deterministic") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> pts(3000);
    for (auto& v : pts) v = g(rng);
    const auto a = lloyd_kmeans(pts, 3, 17, 50, 9);
    const auto b = lloyd_kmeans(pts, 3, 17, 50, 9);
    CHECK(a.centroids == b.centroids);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 1; i < a.sse_history.size(); ++i)
        CHECK(a.sse_history[i] <= a.sse_history[i - 1] * (1 + 1e-12));
    CHECK(a.sse_history.back() == doctest::Approx(sse_of(pts, 3, a)));
}

TEST_CASE("every cluster keeps at least one point") {
    // many duplicates force empty clusters during the iterations
    std::vector<double> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(0.0);
    for (int i = 0; i < 5; ++i) pts.push_back(100.0 + i);
    const auto r = lloyd_kmeans(pts, 1, 6, 25, 2);
    std::vector<int> count(6, 0);
    for (auto l : r.labels) ++count[static_cast<std::size_t>(l)];
    for (int c : count) CHECK(c > 0);
}

TEST_CASE("argument errors") {
    const std::vector<double> pts{1, 2, 3};
    CHECK_THROWS_AS(lloyd_kmeans(pts, 1, 0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(lloyd_kmeans(pts, 1, 4, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(lloyd_kmeans(pts, 2, 1, 10, 1), std::invalid_argument);
}
