#pragma once

#include <span>
#include <vector>

#include "splat6d/transfer_function.hpp"
#include "splat6d/volume.hpp"

namespace splat6d {

/// The 6-channel network input: [normalized HU, group label, R, G, B, A],
/// stored channel-major. RGBA are rescaled to [0, 1].
struct InputVolume6 {
    static constexpr int kChannels = 6;
    enum Channel : int { kHu = 0, kLabel = 1, kRed = 2, kGreen = 3, kBlue = 4, kAlpha = 5 };

    VolumeGeometry geometry;
    std::vector<double> data;

    std::span<const double> channel(int c) const {
        const std::size_t n = geometry.voxel_count();
        return {data.data() + static_cast<std::size_t>(c) * n, n};
    }
    double at(int c, std::size_t voxel) const {
        return data[static_cast<std::size_t>(c) * geometry.voxel_count() + voxel];
    }
};

/// `raw_hu` drives the transfer-function lookup; `normalized` fills channel 0.
/// Throws ShapeMismatch unless all three volumes share dims.
InputVolume6 build_input_channels(const CtVolume& normalized, const CtVolume& raw_hu,
                                  const LabelVolume& consolidated,
                                  const TransferFunctionSet& tfs);

}  // namespace splat6d
