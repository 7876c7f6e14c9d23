#include "raylut/index.h"

#include <cstring>
#include <fstream>
#include <iterator>

namespace raylut {

Dataset Index::prepare_queries(const Dataset& queries) const {
    if (queries.n() > 0 && queries.d() != d_orig && queries.d() != d)
        throw std::invalid_argument("query dimension " + std::to_string(queries.d()) +
                                    " does not match index dimension " +
                                    std::to_string(d_orig));
    if (queries.n() == 0) return Dataset(0, d, {}, queries.metric());
    return queries.padded_to(d);
}

void derive_layout(Index& index) {
    const std::size_t n_sub = index.n_sub();
    const std::size_t c = index.ivf.c;
    index.members.assign(c, {});
    for (std::size_t i = 0; i < index.n; ++i)
        index.members[static_cast<std::size_t>(index.ivf.labels[i])].push_back(
                static_cast<std::uint32_t>(i));

    index.codes.assign(index.n * n_sub, 0);
    for (std::size_t cl = 0; cl < c; ++cl)
        for (std::size_t s = 0; s < n_sub; ++s)
            for (std::size_t e = 0; e < index.entries(); ++e)
                for (auto p : index.inv.list(cl, s, e))
                    index.codes[p * n_sub + s] = static_cast<std::uint16_t>(e);

    index.cluster_codes.assign(c, {});
    for (std::size_t cl = 0; cl < c; ++cl) {
        auto& cc = index.cluster_codes[cl];
        cc.reserve(index.members[cl].size() * n_sub);
        for (auto p : index.members[cl])
            cc.insert(cc.end(), index.codes.begin() + static_cast<std::ptrdiff_t>(p * n_sub),
                      index.codes.begin() + static_cast<std::ptrdiff_t>((p + 1) * n_sub));
    }
}

Index build_index(const Dataset& base, const IndexBuildOptions& opts) {
    if (base.n() == 0) throw std::invalid_argument("build_index: empty base set");
    Index index;
    index.metric = base.metric();
    index.n = base.n();
    index.d_orig = base.d();
    index.d = padded_dim(base.d());
    const Dataset padded = base.padded_to(index.d);

    index.ivf = train_ivf(padded, opts.clusters, opts.kmeans_iters, opts.seed);
    const auto residuals = compute_residuals(padded, index.ivf);
    index.codebook = train_codebooks(residuals, index.d, kSubspaceDim, opts.entries,
                                     opts.seed + 1, opts.kmeans_iters);
    const auto codes = encode(residuals, index.codebook);
    index.inv = build_inverted_map(codes, index.ivf, index.codebook);

    ThresholdTrainOptions topts;
    topts.sample_n = opts.threshold_samples;
    topts.degree = opts.poly_degree;
    topts.seed = opts.seed + 2;
    index.thresholds = train_threshold_model(padded, index.ivf, residuals, topts);

    index.scene = build_scene(index.codebook, index.metric, index.thresholds.thresholds_max);
    index.bvh = Bvh(index.scene, opts.leaf_size);
    derive_layout(index);
    return index;
}

namespace {

constexpr char kMagic[5] = {'R', 'L', 'U', 'T', '1'};

class Writer {
   public:
    template <typename T>
    void put(const T& v) {
        const char* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    template <typename T>
    void put_vec(const std::vector<T>& v) {
        put<std::uint64_t>(v.size());
        const char* p = reinterpret_cast<const char*>(v.data());
        buf_.insert(buf_.end(), p, p + v.size() * sizeof(T));
    }
    void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    const std::vector<char>& bytes() const { return buf_; }

   private:
    std::vector<char> buf_;
};

class Reader {
   public:
    explicit Reader(std::vector<char> b) : buf_(std::move(b)) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    template <typename T>
    std::vector<T> get_vec(std::size_t expect) {
        const auto n = get<std::uint64_t>();
        if (n != expect) throw FormatError("index bundle: array length mismatch");
        need(n * sizeof(T));
        std::vector<T> v(n);
        std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }
    bool done() const { return pos_ == buf_.size(); }
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw FormatError("index bundle: truncated");
    }
    const char* cursor() const { return buf_.data() + pos_; }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

   private:
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

} // namespace

void save_index(const Index& ix, const std::filesystem::path& path) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.put<std::uint64_t>(ix.n);
    w.put<std::uint64_t>(ix.d_orig);
    w.put<std::uint64_t>(ix.ivf.c);
    w.put<std::uint64_t>(ix.entries());
    w.put<std::uint64_t>(ix.n_sub());
    w.put<std::uint32_t>(ix.metric == Metric::L2 ? 0 : 1);
    w.put<std::uint64_t>(ix.d);
    w.put<std::uint64_t>(ix.bvh.leaf_size());

    w.put_vec(ix.ivf.centroids);
    w.put_vec(ix.ivf.labels);
    w.put_vec(ix.codebook.entries);
    w.put_vec(ix.inv.offsets());
    w.put_vec(ix.inv.ids());

    for (const auto& g : ix.scene.sub) {
        w.put(g.base_radius);
        w.put(g.standoff);
        w.put(g.depth);
    }
    for (const auto& p : ix.thresholds.polys) {
        w.put<std::uint64_t>(p.degree);
        w.put_vec(p.coefficients);
        w.put(p.x_shift);
        w.put(p.x_scale);
        w.put(p.t_min);
        w.put(p.t_max);
    }
    w.put_vec(ix.thresholds.thresholds_max);
    for (const auto& m : ix.thresholds.maps) {
        w.put<std::uint64_t>(m.grid);
        w.put(m.min_x);
        w.put(m.min_y);
        w.put(m.max_x);
        w.put(m.max_y);
        w.put_vec(m.counts);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Index load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
    r.need(sizeof(kMagic));
    if (std::memcmp(r.cursor(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError("index bundle: unknown magic");
    r.skip(sizeof(kMagic));

    Index ix;
    ix.n = r.get<std::uint64_t>();
    ix.d_orig = r.get<std::uint64_t>();
    const auto c = r.get<std::uint64_t>();
    const auto e = r.get<std::uint64_t>();
    const auto n_sub = r.get<std::uint64_t>();
    const auto metric = r.get<std::uint32_t>();
    if (metric > 1) throw FormatError("index bundle: bad metric");
    ix.metric = metric == 0 ? Metric::L2 : Metric::InnerProduct;
    ix.d = r.get<std::uint64_t>();
    const auto leaf = r.get<std::uint64_t>();
    if (ix.d != padded_dim(ix.d_orig) || n_sub * kSubspaceDim != ix.d || c == 0 || e == 0 ||
        e > 65536 || leaf == 0 || leaf > kMaxLeafSize)
        throw FormatError("index bundle: inconsistent header");

    ix.ivf.c = c;
    ix.ivf.d = ix.d;
    ix.ivf.centroids = r.get_vec<float>(c * ix.d);
    ix.ivf.labels = r.get_vec<std::int32_t>(ix.n);
    for (auto l : ix.ivf.labels)
        if (l < 0 || static_cast<std::uint64_t>(l) >= c)
            throw FormatError("index bundle: label out of range");
    finalize_ivf(ix.ivf);
    ix.codebook = Codebook(n_sub, e, r.get_vec<double>(n_sub * e * kSubspaceDim));
    auto offsets = r.get_vec<std::uint64_t>(c * n_sub * e + 1);
    auto ids = r.get_vec<std::uint32_t>(ix.n * n_sub);
    if (offsets.back() != ids.size()) throw FormatError("index bundle: inverted map offsets");
    for (std::size_t k = 0; k + 1 < offsets.size(); ++k)
        if (offsets[k] > offsets[k + 1]) throw FormatError("index bundle: inverted map offsets");
    for (auto id : ids)
        if (id >= ix.n) throw FormatError("index bundle: point id out of range");
    ix.inv = InvertedMap(c, n_sub, e, std::move(offsets), std::move(ids));

    std::vector<SubspaceGeometry> stored(n_sub);
    for (auto& g : stored) {
        g.base_radius = r.get<double>();
        g.standoff = r.get<double>();
        g.depth = r.get<double>();
    }
    ix.thresholds.polys.resize(n_sub);
    for (auto& p : ix.thresholds.polys) {
        p.degree = r.get<std::uint64_t>();
        if (p.degree > 64) throw FormatError("index bundle: bad polynomial degree");
        p.coefficients = r.get_vec<double>(p.degree + 1);
        p.x_shift = r.get<double>();
        p.x_scale = r.get<double>();
        p.t_min = r.get<double>();
        p.t_max = r.get<double>();
    }
    ix.thresholds.thresholds_max = r.get_vec<double>(n_sub);
    ix.thresholds.maps.resize(n_sub);
    for (auto& m : ix.thresholds.maps) {
        m.grid = r.get<std::uint64_t>();
        if (m.grid == 0 || m.grid > 100000) throw FormatError("index bundle: bad density grid");
        m.min_x = r.get<double>();
        m.min_y = r.get<double>();
        m.max_x = r.get<double>();
        m.max_y = r.get<double>();
        m.counts = r.get_vec<std::uint32_t>(m.grid * m.grid);
        const double area = m.cell_w() * m.cell_h();
        m.density.resize(m.counts.size());
        for (std::size_t k = 0; k < m.counts.size(); ++k) m.density[k] = m.counts[k] / area;
    }
    if (!r.done()) throw FormatError("index bundle: trailing bytes");

    ix.scene = build_scene(ix.codebook, ix.metric, ix.thresholds.thresholds_max);
    for (std::size_t s = 0; s < n_sub; ++s) {
        const auto& g = ix.scene.sub[s];
        if (g.base_radius != stored[s].base_radius || g.standoff != stored[s].standoff ||
            g.depth != stored[s].depth)
            throw FormatError("index bundle: scene constants do not match codebook");
    }
    ix.bvh = Bvh(ix.scene, leaf);
    derive_layout(ix);
    return ix;
}

} // namespace raylut
