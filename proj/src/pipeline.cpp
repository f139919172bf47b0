#include "splat6d/pipeline.hpp"

#include "splat6d/error.hpp"
#include "splat6d/labels.hpp"

namespace splat6d {

Scene initialize_scene(const CtVolume& ct, const LabelVolume& labels, const TransferFunctionSet& tfs,
                       const InitConfig& config) {
    CtVolume hu = ct;
    LabelVolume lab = labels;
    if (config.isotropic_mm) {
        hu = resample_isotropic(ct, *config.isotropic_mm);
        lab = resample_isotropic(labels, *config.isotropic_mm);
    }
    if (!lab.consolidated) lab = consolidate_labels(lab);
    if (hu.geometry.dims != lab.geometry.dims) {
        throw Error(ErrorCode::ShapeMismatch, "CT and label volumes differ in dims");
    }
    const CtVolume normalized = normalize_hu(hu, &lab);
    const InputVolume6 in6 = build_input_channels(normalized, hu, lab, tfs);
    return agp_initialize(in6, lab, config.agp);
}

}  // namespace splat6d
