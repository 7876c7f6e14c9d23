#include "raylut/dataset.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

namespace raylut {

static_assert(std::endian::native == std::endian::little,
              "vecs and bundle I/O assume a little-endian host");

Metric parse_metric(std::string_view s) {
    if (s == "l2" || s == "L2") return Metric::L2;
    if (s == "ip" || s == "IP" || s == "inner_product") return Metric::InnerProduct;
    throw ConfigError("unknown metric '" + std::string(s) + "' (expected l2|ip)");
}

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<float> data, Metric metric)
        : n_(n), d_(d), data_(std::move(data)), metric_(metric) {
    if (d_ == 0 && n_ > 0) throw std::invalid_argument("dataset dimension must be > 0");
    if (data_.size() != n_ * d_)
        throw std::invalid_argument("dataset data length != n * d");
    for (float v : data_)
        if (!std::isfinite(v)) throw std::invalid_argument("dataset contains NaN/Inf");
}

Dataset Dataset::padded_to(std::size_t d) const {
    if (d < d_) throw std::invalid_argument("cannot pad to a smaller dimension");
    if (d == d_) return *this;
    std::vector<float> out(n_ * d, 0.0f);
    for (std::size_t i = 0; i < n_; ++i)
        std::memcpy(out.data() + i * d, data_.data() + i * d_, d_ * sizeof(float));
    return Dataset(n_, d, std::move(out), metric_);
}

namespace {

std::size_t elem_size(VecsElem e) {
    return e == VecsElem::UInt8 ? 1 : 4;
}

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

// Walks the record structure, calling fn(record_index, payload_ptr) per record.
template <typename Fn>
std::pair<std::size_t, std::size_t> scan_records(const std::vector<char>& buf,
                                                 std::size_t esize,
                                                 const std::string& name, Fn&& fn) {
    if (buf.empty()) throw FormatError(name + ": empty file");
    if (buf.size() < 4) throw FormatError(name + ": truncated header");
    const auto d0 = load_le<std::int32_t>(buf.data());
    if (d0 <= 0) throw FormatError(name + ": non-positive dimension");
    const std::size_t d = static_cast<std::size_t>(d0);
    const std::size_t rec = 4 + d * esize;
    if (buf.size() % rec != 0) throw FormatError(name + ": truncated record");
    const std::size_t n = buf.size() / rec;
    for (std::size_t i = 0; i < n; ++i) {
        const char* p = buf.data() + i * rec;
        if (load_le<std::int32_t>(p) != d0)
            throw FormatError(name + ": inconsistent dimension at record " +
                              std::to_string(i));
        fn(i, p + 4);
    }
    return {n, d};
}

} // namespace

VecsElem elem_from_extension(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".fvecs") return VecsElem::Float32;
    if (ext == ".bvecs") return VecsElem::UInt8;
    if (ext == ".ivecs") return VecsElem::Int32;
    throw ConfigError("cannot infer vecs format from extension of " + path.string());
}

Dataset read_vecs(const std::filesystem::path& path, VecsElem elem) {
    const auto buf = slurp(path);
    const std::size_t es = elem_size(elem);
    std::vector<float> data;
    data.reserve(buf.size() / es);
    auto [n, d] = scan_records(buf, es, path.string(), [&](std::size_t, const char* p) {
        const std::size_t d = static_cast<std::size_t>(load_le<std::int32_t>(p - 4));
        for (std::size_t j = 0; j < d; ++j) {
            switch (elem) {
                case VecsElem::Float32:
                    data.push_back(load_le<float>(p + 4 * j));
                    break;
                case VecsElem::UInt8:
                    data.push_back(static_cast<float>(static_cast<unsigned char>(p[j])));
                    break;
                case VecsElem::Int32:
                    data.push_back(static_cast<float>(load_le<std::int32_t>(p + 4 * j)));
                    break;
            }
        }
    });
    return Dataset(n, d, std::move(data));
}

void write_vecs(const std::filesystem::path& path, const Dataset& ds, VecsElem elem) {
    std::vector<char> buf;
    buf.reserve(ds.n() * (4 + ds.d() * elem_size(elem)));
    auto put = [&](const auto& v) {
        const char* p = reinterpret_cast<const char*>(&v);
        buf.insert(buf.end(), p, p + sizeof(v));
    };
    const auto d = static_cast<std::int32_t>(ds.d());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        put(d);
        for (float v : ds.row(i)) {
            switch (elem) {
                case VecsElem::Float32:
                    put(v);
                    break;
                case VecsElem::UInt8:
                    if (v < 0.0f || v > 255.0f || v != std::floor(v))
                        throw std::out_of_range("value not representable as uint8");
                    buf.push_back(static_cast<char>(static_cast<unsigned char>(v)));
                    break;
                case VecsElem::Int32:
                    if (v != std::floor(v) || v < -2147483648.0f || v >= 2147483648.0f)
                        throw std::out_of_range("value not representable as int32");
                    put(static_cast<std::int32_t>(v));
                    break;
            }
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_neighbor_table(const std::filesystem::path& ids_path,
                          const std::filesystem::path& scores_path,
                          const NeighborTable& t) {
    std::vector<char> ib, sb;
    auto put = [](std::vector<char>& b, const auto& v) {
        const char* p = reinterpret_cast<const char*>(&v);
        b.insert(b.end(), p, p + sizeof(v));
    };
    const auto k = static_cast<std::int32_t>(t.k);
    for (std::size_t q = 0; q < t.q_count; ++q) {
        put(ib, k);
        put(sb, k);
        for (std::size_t j = 0; j < t.k; ++j) {
            put(ib, static_cast<std::int32_t>(t.ids[q * t.k + j]));
            put(sb, t.scores[q * t.k + j]);
        }
    }
    for (auto [path, b] : {std::pair{&ids_path, &ib}, std::pair{&scores_path, &sb}}) {
        std::ofstream out(*path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path->string());
        out.write(b->data(), static_cast<std::streamsize>(b->size()));
    }
}

std::filesystem::path companion_scores_path(const std::filesystem::path& ids_path) {
    auto p = ids_path;
    if (p.extension() == ".ivecs") return p.replace_extension(".fvecs");
    p += ".fvecs";
    return p;
}

NeighborTable read_neighbor_table(const std::filesystem::path& ids_path) {
    const auto buf = slurp(ids_path);
    NeighborTable t;
    auto [n, d] = scan_records(buf, 4, ids_path.string(), [&](std::size_t, const char* p) {
        const std::size_t d = static_cast<std::size_t>(load_le<std::int32_t>(p - 4));
        for (std::size_t j = 0; j < d; ++j)
            t.ids.push_back(load_le<std::int32_t>(p + 4 * j));
    });
    t.q_count = n;
    t.k = d;
    t.scores.assign(n * d, 0.0f);
    return t;
}

namespace {

std::vector<double> blob_centers(std::size_t d, std::size_t n_clusters, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> centers(n_clusters * d);
    for (auto& c : centers) c = unif(rng);
    return centers;
}

Dataset draw_blobs(std::size_t n, std::size_t d, std::size_t n_clusters, double spread,
                   const std::vector<double>& centers, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, spread);
    std::vector<float> data(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* c = centers.data() + (i % n_clusters) * d;
        for (std::size_t j = 0; j < d; ++j)
            data[i * d + j] = static_cast<float>(c[j] + gauss(rng));
    }
    return Dataset(n, d, std::move(data));
}

void check_synthetic_args(std::size_t n, std::size_t d, std::size_t n_clusters,
                          double spread) {
    if (n == 0 || d == 0 || n_clusters == 0)
        throw std::invalid_argument("gen_synthetic: counts must be positive");
    if (!(spread > 0.0)) throw std::invalid_argument("gen_synthetic: spread must be > 0");
}

} // namespace

Dataset gen_synthetic(std::size_t n, std::size_t d, std::size_t n_clusters, double spread,
                      std::uint64_t seed) {
    check_synthetic_args(n, d, n_clusters, spread);
    if (n_clusters > n) throw std::invalid_argument("gen_synthetic: n_clusters > n");
    std::mt19937_64 rng(seed);
    const auto centers = blob_centers(d, n_clusters, rng);
    return draw_blobs(n, d, n_clusters, spread, centers, rng);
}

Dataset gen_synthetic_queries(std::size_t n, std::size_t d, std::size_t n_clusters,
                              double spread, std::uint64_t seed, std::uint64_t query_seed) {
    check_synthetic_args(n, d, n_clusters, spread);
    std::mt19937_64 rng(seed);
    const auto centers = blob_centers(d, n_clusters, rng);
    std::mt19937_64 qrng(query_seed ^ 0x9e3779b97f4a7c15ULL);
    return draw_blobs(n, d, n_clusters, spread, centers, qrng);
}

} // namespace raylut
