#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "splat6d/gauss6d.hpp"

namespace splat6d {

inline constexpr double kHuMin = -1024.0;
inline constexpr double kHuMax = 3072.0;

/// Voxel grid placement. Index (i, j, k) runs along x, y, z; storage is
/// x-fastest. World position = origin + direction * (spacing .* index), in mm.
struct VolumeGeometry {
    std::array<int, 3> dims{0, 0, 0};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();
    Mat3 direction = Mat3::Identity();

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t linear_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
    }
    bool contains(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
    }
    bool same_grid(const VolumeGeometry& o) const {
        return dims == o.dims && spacing.isApprox(o.spacing, 1e-9) &&
               origin.isApprox(o.origin, 1e-9) && direction.isApprox(o.direction, 1e-9);
    }

    /// Throws InvalidParameter unless dims > 0, spacing > 0 and direction is orthonormal.
    void validate() const;
};

struct CtVolume {
    VolumeGeometry geometry;
    std::vector<double> hu;  // voxel_count() entries

    double at(int i, int j, int k) const { return hu[geometry.linear_index(i, j, k)]; }
};

struct LabelVolume {
    VolumeGeometry geometry;
    std::vector<std::uint8_t> labels;
    bool consolidated = false;

    std::uint8_t at(int i, int j, int k) const { return labels[geometry.linear_index(i, j, k)]; }
};

/// Accepts "<name>", "<name>.meta" or "<name>.raw". HU values are clamped to
/// [-1024, 3072].
CtVolume load_volume(const std::filesystem::path& path);
void save_volume(const CtVolume& vol, const std::filesystem::path& path);

LabelVolume load_labels(const std::filesystem::path& path);
void save_labels(const LabelVolume& labels, const std::filesystem::path& path);

/// Trilinear resampling onto an isotropic grid with the same origin and
/// direction. The output covers the input extent: n' = floor((n - 1) s / t) + 1.
CtVolume resample_isotropic(const CtVolume& vol, double target_mm = 1.5);
/// Nearest-neighbour variant for label maps.
LabelVolume resample_isotropic(const LabelVolume& labels, double target_mm = 1.5);

struct HuNormalization {
    double clip_lo = 0.0;
    double clip_hi = 0.0;
    double mean = 0.0;
    double stddev = 1.0;
};

/// Linear-interpolated percentile (rank p/100 * (n - 1)), p in [0, 100].
double percentile(std::vector<double> values, double p);

/// Statistics over foreground voxels (label != 0) when a mask is given, else all.
HuNormalization hu_normalization(const CtVolume& vol, const LabelVolume* mask = nullptr);

/// Clip to the [0.5, 99.5] foreground percentiles, then z-score.
/// Throws DegenerateVolume on zero variance.
CtVolume normalize_hu(const CtVolume& vol, const LabelVolume* mask = nullptr);

}  // namespace splat6d
