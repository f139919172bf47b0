#pragma once

#include <optional>

#include "splat6d/agp.hpp"
#include "splat6d/transfer_function.hpp"

namespace splat6d {

struct InitConfig {
    std::optional<double> isotropic_mm;  // resample first when set
    AgpConfig agp;
};

/// CT + labels + transfer functions to an AGP-initialized scene: optional
/// isotropic resampling, label consolidation, foreground HU normalization,
/// 6-channel input assembly, instantiation.
Scene initialize_scene(const CtVolume& ct, const LabelVolume& labels, const TransferFunctionSet& tfs,
                       const InitConfig& config = {});

}  // namespace splat6d
