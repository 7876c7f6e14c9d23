#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "raylut/scene.h"

namespace raylut {

struct BvhNode {
    double lo[3], hi[3]; // AABB
    // Bounds on the spheres below this node, used to reject subtrees whose
    // spheres all lie beyond the ray's travel budget.
    double center_lo[2], center_hi[2];
    double center_z_min;
    double radius_max;
    std::uint32_t left = 0, right = 0; // internal nodes
    std::uint32_t first = 0, count = 0; // leaves (count > 0)

    bool is_leaf() const { return count > 0; }
};

struct TraversalStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t sphere_tests = 0;
    std::uint64_t hits = 0;

    TraversalStats& operator+=(const TraversalStats& o) {
        nodes_visited += o.nodes_visited;
        sphere_tests += o.sphere_tests;
        hits += o.hits;
        return *this;
    }
};

struct Hit {
    std::uint32_t sphere; // index into SphereScene::spheres
    double t_hit;
    std::uint32_t s;
    std::uint32_t e;
};

inline constexpr std::size_t kDefaultLeafSize = 4;
inline constexpr std::size_t kMaxLeafSize = 256;

class Bvh {
   public:
    Bvh() = default;
    Bvh(const SphereScene& scene, std::size_t leaf_size);

    const std::vector<BvhNode>& nodes() const { return nodes_; }
    /// Sphere indices in leaf order.
    const std::vector<std::uint32_t>& sphere_order() const { return order_; }
    std::size_t leaf_size() const { return leaf_size_; }
    std::size_t depth() const;
    std::size_t size() const { return order_.size(); }

    /// Appends every hit to `out` (unordered) and accumulates counters.
    void traverse(const Ray& ray, std::vector<Hit>& out, TraversalStats& stats) const;

   private:
    std::uint32_t build(std::vector<std::uint32_t>& idx, std::size_t first, std::size_t count,
                        const SphereScene& scene);

    std::size_t leaf_size_ = kDefaultLeafSize;
    std::vector<BvhNode> nodes_;
    std::vector<std::uint32_t> order_;
    // leaf-ordered sphere data
    std::vector<double> cx_, cy_, cz_, r2_;
    std::vector<std::uint32_t> s_, e_;
};

Bvh build_bvh(const SphereScene& scene, std::size_t leaf_size = kDefaultLeafSize);

std::vector<Hit> traverse_all_hits(const Bvh& bvh, const Ray& ray,
                                   TraversalStats* stats = nullptr);

/// Entry time of a +z ray into a sphere; empty unless the lateral distance is
/// strictly below the radius and 0 <= t <= t_max.
std::optional<double> ray_sphere_entry_t(const Ray& ray, const Sphere& sphere);

} // namespace raylut
