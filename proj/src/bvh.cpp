#include "raylut/bvh.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "raylut/kernels.h"

namespace raylut {

namespace {

// Boxes are widened by a few ulps so that floating-point rounding in the
// exact sphere test can never fall outside a node that was culled.
constexpr double kBoxSlack = 1e-12;

} // namespace

Bvh::Bvh(const SphereScene& scene, std::size_t leaf_size) : leaf_size_(leaf_size) {
    if (scene.spheres.empty()) throw std::invalid_argument("build_bvh: empty scene");
    if (leaf_size == 0 || leaf_size > kMaxLeafSize)
        throw std::invalid_argument("build_bvh: leaf_size must be in [1, 256]");
    const std::size_t n = scene.spheres.size();
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(2 * (n / leaf_size + 1));
    build(idx, 0, n, scene);
    order_ = std::move(idx);

    cx_.resize(n);
    cy_.resize(n);
    cz_.resize(n);
    r2_.resize(n);
    s_.resize(n);
    e_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sphere& sp = scene.spheres[order_[i]];
        cx_[i] = sp.cx;
        cy_[i] = sp.cy;
        cz_[i] = sp.cz;
        r2_[i] = sp.r * sp.r;
        s_[i] = sp.s;
        e_[i] = sp.e;
    }
}

std::uint32_t Bvh::build(std::vector<std::uint32_t>& idx, std::size_t first, std::size_t count,
                         const SphereScene& scene) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    BvhNode node{};
    for (int a = 0; a < 3; ++a) {
        node.lo[a] = INFINITY;
        node.hi[a] = -INFINITY;
    }
    node.center_lo[0] = node.center_lo[1] = INFINITY;
    node.center_hi[0] = node.center_hi[1] = -INFINITY;
    node.center_z_min = INFINITY;
    node.radius_max = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const Sphere& sp = scene.spheres[idx[i]];
        const double c[3] = {sp.cx, sp.cy, sp.cz};
        for (int a = 0; a < 3; ++a) {
            const double pad = kBoxSlack * (std::abs(c[a]) + sp.r);
            node.lo[a] = std::min(node.lo[a], c[a] - sp.r - pad);
            node.hi[a] = std::max(node.hi[a], c[a] + sp.r + pad);
        }
        for (int a = 0; a < 2; ++a) {
            node.center_lo[a] = std::min(node.center_lo[a], c[a]);
            node.center_hi[a] = std::max(node.center_hi[a], c[a]);
        }
        node.center_z_min = std::min(node.center_z_min, sp.cz);
        node.radius_max = std::max(node.radius_max, sp.r);
    }

    if (count <= leaf_size_) {
        node.first = static_cast<std::uint32_t>(first);
        node.count = static_cast<std::uint32_t>(count);
        nodes_[id] = node;
        return id;
    }

    int axis = 0;
    double widest = -1.0;
    for (int a = 0; a < 3; ++a) {
        if (node.hi[a] - node.lo[a] > widest) {
            widest = node.hi[a] - node.lo[a];
            axis = a;
        }
    }
    auto key = [&](std::uint32_t i) {
        const Sphere& sp = scene.spheres[i];
        return axis == 0 ? sp.cx : axis == 1 ? sp.cy : sp.cz;
    };
    const std::size_t mid = count / 2;
    std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(first),
                     idx.begin() + static_cast<std::ptrdiff_t>(first + mid),
                     idx.begin() + static_cast<std::ptrdiff_t>(first + count),
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ka = key(a), kb = key(b);
                         return ka < kb || (ka == kb && a < b);
                     });
    node.left = build(idx, first, mid, scene);
    node.right = build(idx, first + mid, count - mid, scene);
    nodes_[id] = node;
    return id;
}

std::size_t Bvh::depth() const {
    if (nodes_.empty()) return 0;
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [n, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (!nodes_[n].is_leaf()) {
            stack.push_back({nodes_[n].left, d + 1});
            stack.push_back({nodes_[n].right, d + 1});
        }
    }
    return best;
}

void Bvh::traverse(const Ray& ray, std::vector<Hit>& out, TraversalStats& stats) const {
    const auto& k = kernels::active();
    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    std::uint32_t hit_idx[kMaxLeafSize];
    double hit_t[kMaxLeafSize];
    std::uint64_t hits = 0;

    while (top > 0) {
        const BvhNode& node = nodes_[stack[--top]];
        ++stats.nodes_visited;

        // slab test: the ray is the vertical segment above (ox, oy) covering
        // [oz, oz + t_max]
        if (ray.ox < node.lo[0] || ray.ox > node.hi[0] || ray.oy < node.lo[1] ||
            ray.oy > node.hi[1])
            continue;
        if (node.hi[2] - ray.oz < 0.0 || node.lo[2] - ray.oz > ray.t_max) continue;

        // travel-budget test: a sphere at gap g >= g_min is only reachable
        // within lateral distance sqrt(r^2 - (g - t_max)^2)
        const double over = std::max(0.0, (node.center_z_min - ray.oz) - ray.t_max);
        const double reach2 = node.radius_max * node.radius_max - over * over;
        const double dx = std::max({node.center_lo[0] - ray.ox, 0.0, ray.ox - node.center_hi[0]});
        const double dy = std::max({node.center_lo[1] - ray.oy, 0.0, ray.oy - node.center_hi[1]});
        const double slack = kBoxSlack * 1e3 * node.radius_max * node.radius_max;
        if (dx * dx + dy * dy > reach2 + slack) continue;

        if (node.is_leaf()) {
            const std::size_t f = node.first;
            const std::size_t nh = k.sphere_entry(ray.ox, ray.oy, ray.oz, ray.t_max,
                                                  cx_.data() + f, cy_.data() + f, cz_.data() + f,
                                                  r2_.data() + f, node.count, hit_idx, hit_t);
            stats.sphere_tests += node.count;
            for (std::size_t h = 0; h < nh; ++h) {
                const std::size_t i = f + hit_idx[h];
                out.push_back({order_[i], hit_t[h], s_[i], e_[i]});
            }
            hits += nh;
        } else {
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }
    stats.hits += hits;
}

Bvh build_bvh(const SphereScene& scene, std::size_t leaf_size) {
    return Bvh(scene, leaf_size);
}

std::vector<Hit> traverse_all_hits(const Bvh& bvh, const Ray& ray, TraversalStats* stats) {
    std::vector<Hit> out;
    TraversalStats local;
    bvh.traverse(ray, out, stats ? *stats : local);
    return out;
}

std::optional<double> ray_sphere_entry_t(const Ray& ray, const Sphere& sp) {
    double t;
    if (kernels::sphere_entry_one(ray.ox, ray.oy, ray.oz, ray.t_max, sp.cx, sp.cy, sp.cz,
                                  sp.r * sp.r, t))
        return t;
    return std::nullopt;
}

} // namespace raylut
