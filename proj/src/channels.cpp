#include "splat6d/channels.hpp"

#include <tbb/parallel_for.h>

#include "splat6d/error.hpp"

namespace splat6d {

InputVolume6 build_input_channels(const CtVolume& normalized, const CtVolume& raw_hu,
                                  const LabelVolume& consolidated,
                                  const TransferFunctionSet& tfs) {
    const auto& dims = normalized.geometry.dims;
    if (raw_hu.geometry.dims != dims || consolidated.geometry.dims != dims) {
        throw Error(ErrorCode::ShapeMismatch, "volume, raw volume and labels must share dims");
    }
    if (!consolidated.consolidated) {
        throw Error(ErrorCode::InvalidParameter, "labels must be consolidated before building channels");
    }
    InputVolume6 out;
    out.geometry = normalized.geometry;
    const std::size_t n = out.geometry.voxel_count();
    out.data.resize(InputVolume6::kChannels * n);
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const auto& r) {
        for (std::size_t v = r.begin(); v != r.end(); ++v) {
            const int label = consolidated.labels[v];
            const Rgba rgba = tfs[label].eval(raw_hu.hu[v]);
            out.data[v] = normalized.hu[v];
            out.data[n + v] = label;
            out.data[2 * n + v] = rgba[0] / 255.0;
            out.data[3 * n + v] = rgba[1] / 255.0;
            out.data[4 * n + v] = rgba[2] / 255.0;
            out.data[5 * n + v] = rgba[3];
        }
    });
    return out;
}

}  // namespace splat6d
