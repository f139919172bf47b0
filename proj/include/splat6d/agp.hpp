#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "splat6d/channels.hpp"
#include "splat6d/scene.hpp"

namespace splat6d {

/// Dense per-voxel Gaussian attributes at half the input resolution, stored
/// channel-major. Channel layout (version kLayoutVersion):
///   [0, 3)   direction-mean offset from the priming direction
///   [3, 15)  SH: DC offset (3) followed by degree-1 coefficients (9), basis-major
///   15       opacity offset
///   [16, 22) log-diagonal Cholesky entries
///   [22, 37) strictly-lower Cholesky entries, row-major
struct ParamVolume {
    static constexpr int kChannels = 37;
    static constexpr int kMuD = 0;
    static constexpr int kSh = 3;
    static constexpr int kOpacity = 15;
    static constexpr int kCov = 16;

    VolumeGeometry geometry;
    std::vector<double> data;

    ParamVolume() = default;
    explicit ParamVolume(const VolumeGeometry& g)
        : geometry(g), data(static_cast<std::size_t>(kChannels) * g.voxel_count(), 0.0) {}

    double& at(int c, std::size_t voxel) {
        return data[static_cast<std::size_t>(c) * geometry.voxel_count() + voxel];
    }
    double at(int c, std::size_t voxel) const {
        return data[static_cast<std::size_t>(c) * geometry.voxel_count() + voxel];
    }
};

struct AgpConfig {
    int stride = 1;
    Vec3 mu_d{0.0, 0.0, 1.0};
    /// Overrides the default scale (half the instantiation-grid spacing, 1.0 for directions).
    std::optional<CovarianceScale> cov_scale;
    OpacityModulation modulation = OpacityModulation::PeakNormalized;
};

/// origin + direction * (spacing .* index). Throws InvalidParameter when out of range.
Vec3 voxel_world_coords(const std::array<int, 3>& index, const VolumeGeometry& g);

/// Default covariance scale for Gaussians on a grid sampled every `stride` voxels.
CovarianceScale default_cov_scale(const VolumeGeometry& g, int stride = 1);

/// One Gaussian per foreground voxel (every `stride`-th voxel per axis).
/// Throws EmptyScene when no voxel is foreground.
Scene agp_initialize(const InputVolume6& in6, const LabelVolume& labels, const AgpConfig& config = {});

/// Grid of the parameter volume: floor(n / 2) voxels at twice the spacing,
/// sampling input voxel (2i, 2j, 2k).
VolumeGeometry half_resolution(const VolumeGeometry& g);
InputVolume6 downsample_half(const InputVolume6& in6);
LabelVolume downsample_half(const LabelVolume& labels);

/// Instantiates foreground voxels of the half-resolution grid: SH and
/// direction are the priming values plus predicted offsets, opacity_raw is
/// base alpha plus the predicted offset, covariance is copied.
Scene decode_param_volume(const ParamVolume& psi, const InputVolume6& in6,
                          const LabelVolume& labels, const AgpConfig& config = {});

/// Inverse of decode_param_volume for a scene decoded on the same inputs.
/// Background voxels are zero.
ParamVolume encode_param_volume(const Scene& scene, const InputVolume6& in6,
                                const LabelVolume& labels, const AgpConfig& config = {});

/// `<name>.raw` (f32 little-endian, channel-major) + `<name>.meta`.
ParamVolume load_param_volume(const std::filesystem::path& path);
void save_param_volume(const ParamVolume& psi, const std::filesystem::path& path);

}  // namespace splat6d
