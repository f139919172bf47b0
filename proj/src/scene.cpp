#include <limits>

#include "splat6d/agp.hpp"
#include "splat6d/scene.hpp"

namespace splat6d {

std::array<std::size_t, kNumGroups> Scene::group_counts() const {
    std::array<std::size_t, kNumGroups> counts{};
    for (const auto& g : gaussians) ++counts[g.label];
    return counts;
}

std::array<Vec3, 2> Scene::grid_bounds() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    const auto& g = meta.grid;
    for (int corner = 0; corner < 8; ++corner) {
        const std::array<int, 3> idx{(corner & 1) ? g.dims[0] - 1 : 0,
                                     (corner & 2) ? g.dims[1] - 1 : 0,
                                     (corner & 4) ? g.dims[2] - 1 : 0};
        const Vec3 p = voxel_world_coords(idx, g);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

Scene filter_scene(const Scene& scene, GroupMask mask) {
    Scene out;
    out.meta = scene.meta;
    if (mask.all()) {
        out.gaussians = scene.gaussians;
        return out;
    }
    for (const auto& g : scene.gaussians) {
        if (mask.test(g.label)) out.gaussians.push_back(g);
    }
    return out;
}

Instrumentation& instrumentation() {
    static Instrumentation counters;
    return counters;
}

}  // namespace splat6d
