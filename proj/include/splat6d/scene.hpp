#pragma once

#include <array>
#include <atomic>
#include <bitset>
#include <cstdint>
#include <vector>

#include "splat6d/gauss6d.hpp"
#include "splat6d/volume.hpp"

namespace splat6d {

/// One bit per consolidated group; bit g selects label g.
using GroupMask = std::bitset<kNumGroups>;

inline GroupMask all_groups() { return GroupMask{}.set(); }

/// Version of the 37-channel parameter layout and the scene record layout.
inline constexpr std::uint32_t kLayoutVersion = 1;

struct SceneMeta {
    VolumeGeometry grid;              // grid the Gaussians were instantiated on
    CovarianceScale cov_scale;
    OpacityModulation modulation = OpacityModulation::PeakNormalized;
    std::uint32_t layout_version = kLayoutVersion;
};

/// The instantiated Gaussian set plus provenance.
struct Scene {
    std::vector<Gaussian6D> gaussians;
    SceneMeta meta;

    std::size_t size() const { return gaussians.size(); }
    std::array<std::size_t, kNumGroups> group_counts() const;

    /// World-space bounds of the source grid, [min, max].
    std::array<Vec3, 2> grid_bounds() const;
};

/// Keeps exactly the Gaussians whose label is in `mask`, preserving order.
Scene filter_scene(const Scene& scene, GroupMask mask);

/// Process-wide counters used to check that toggling groups never rebuilds a scene.
struct Instrumentation {
    std::atomic<std::uint64_t> instantiations{0};  // AGP / parameter-volume decodes
    std::atomic<std::uint64_t> preparations{0};    // renderer scene preparations
};

Instrumentation& instrumentation();

}  // namespace splat6d
