#pragma once

#include "splat6d/volume.hpp"

namespace splat6d {

struct PhantomConfig {
    int size = 64;         // voxels per axis
    double spacing = 2.0;  // mm
};

struct Phantom {
    CtVolume ct;
    LabelVolume labels;  // consolidated: skeleton, liver and lung groups
};

/// Synthetic torso of nested ellipsoids centred on the world origin: a banded
/// bone shell and spine, a liver and two lungs, with smooth HU ramps inside
/// each structure.
Phantom make_phantom(const PhantomConfig& config = {});

}  // namespace splat6d
