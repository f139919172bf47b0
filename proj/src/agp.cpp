#include "splat6d/agp.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include <tbb/parallel_for.h>

#include "descriptor.hpp"
#include "splat6d/error.hpp"

namespace splat6d {

Vec3 voxel_world_coords(const std::array<int, 3>& index, const VolumeGeometry& g) {
    if (!g.contains(index[0], index[1], index[2])) {
        throw Error(ErrorCode::InvalidParameter, "voxel index out of range");
    }
    const Vec3 scaled(index[0] * g.spacing[0], index[1] * g.spacing[1], index[2] * g.spacing[2]);
    return g.origin + g.direction * scaled;
}

CovarianceScale default_cov_scale(const VolumeGeometry& g, int stride) {
    return {0.5 * stride * g.spacing.mean(), 1.0};
}

namespace {

void check_inputs(const InputVolume6& in6, const LabelVolume& labels) {
    if (in6.geometry.dims != labels.geometry.dims) {
        throw Error(ErrorCode::ShapeMismatch, "input channels and labels differ in dims");
    }
    if (in6.data.size() != InputVolume6::kChannels * in6.geometry.voxel_count()) {
        throw Error(ErrorCode::ShapeMismatch, "input volume must have exactly 6 channels");
    }
}

// Visits foreground voxels in storage order (z-major slabs processed in
// parallel, concatenated in slab order).
template <typename MakeGaussian>
std::vector<Gaussian6D> instantiate(const LabelVolume& labels, int stride, MakeGaussian make) {
    const auto& g = labels.geometry;
    const int nk = (g.dims[2] + stride - 1) / stride;
    std::vector<std::vector<Gaussian6D>> slabs(static_cast<std::size_t>(nk));
    tbb::parallel_for(0, nk, [&](int kk) {
        const int k = kk * stride;
        auto& out = slabs[static_cast<std::size_t>(kk)];
        for (int j = 0; j < g.dims[1]; j += stride) {
            for (int i = 0; i < g.dims[0]; i += stride) {
                const std::size_t v = g.linear_index(i, j, k);
                const std::uint8_t label = labels.labels[v];
                if (label == 0) continue;
                out.push_back(make(std::array<int, 3>{i, j, k}, v, label));
            }
        }
    });
    std::vector<Gaussian6D> all;
    for (auto& s : slabs) all.insert(all.end(), s.begin(), s.end());
    return all;
}

Gaussian6D primed_gaussian(const InputVolume6& in6, const VolumeGeometry& grid,
                           const std::array<int, 3>& idx, std::size_t v, std::uint8_t label,
                           const Vec3& mu_d) {
    Gaussian6D gs;
    gs.mu_p = voxel_world_coords(idx, grid);
    gs.mu_d = mu_d;
    for (int ch = 0; ch < 3; ++ch) {
        gs.sh[static_cast<std::size_t>(ch)] = sh_dc_from_color(in6.at(InputVolume6::kRed + ch, v));
    }
    gs.label = label;
    return gs;
}

}  // namespace

Scene agp_initialize(const InputVolume6& in6, const LabelVolume& labels, const AgpConfig& config) {
    check_inputs(in6, labels);
    if (config.stride < 1) throw Error(ErrorCode::InvalidParameter, "stride must be >= 1");
    Scene scene;
    scene.meta.grid = in6.geometry;
    scene.meta.cov_scale = config.cov_scale.value_or(default_cov_scale(in6.geometry, config.stride));
    scene.meta.modulation = config.modulation;
    scene.gaussians = instantiate(labels, config.stride,
                                  [&](const std::array<int, 3>& idx, std::size_t v, std::uint8_t label) {
                                      Gaussian6D gs = primed_gaussian(in6, in6.geometry, idx, v,
                                                                      label, config.mu_d);
                                      const double a = std::clamp(in6.at(InputVolume6::kAlpha, v),
                                                                  1e-4, 1.0 - 1e-4);
                                      gs.opacity_raw = logit(a);
                                      return gs;
                                  });
    if (scene.gaussians.empty()) throw Error(ErrorCode::EmptyScene, "no foreground voxels");
    instrumentation().instantiations.fetch_add(1, std::memory_order_relaxed);
    return scene;
}

VolumeGeometry half_resolution(const VolumeGeometry& g) {
    VolumeGeometry h = g;
    for (int a = 0; a < 3; ++a) {
        h.dims[a] = g.dims[a] / 2;
        if (h.dims[a] < 1) throw Error(ErrorCode::ShapeMismatch, "volume too small to halve");
        h.spacing[a] = 2.0 * g.spacing[a];
    }
    return h;
}

InputVolume6 downsample_half(const InputVolume6& in6) {
    InputVolume6 out;
    out.geometry = half_resolution(in6.geometry);
    const auto& go = out.geometry;
    const std::size_t n = go.voxel_count();
    out.data.resize(InputVolume6::kChannels * n);
    for (int c = 0; c < InputVolume6::kChannels; ++c) {
        for (int k = 0; k < go.dims[2]; ++k)
            for (int j = 0; j < go.dims[1]; ++j)
                for (int i = 0; i < go.dims[0]; ++i)
                    out.data[static_cast<std::size_t>(c) * n + go.linear_index(i, j, k)] =
                        in6.at(c, in6.geometry.linear_index(2 * i, 2 * j, 2 * k));
    }
    return out;
}

LabelVolume downsample_half(const LabelVolume& labels) {
    LabelVolume out;
    out.consolidated = labels.consolidated;
    out.geometry = half_resolution(labels.geometry);
    const auto& go = out.geometry;
    out.labels.resize(go.voxel_count());
    for (int k = 0; k < go.dims[2]; ++k)
        for (int j = 0; j < go.dims[1]; ++j)
            for (int i = 0; i < go.dims[0]; ++i)
                out.labels[go.linear_index(i, j, k)] = labels.at(2 * i, 2 * j, 2 * k);
    return out;
}

namespace {

void check_param_volume(const ParamVolume& psi, const InputVolume6& in6) {
    const VolumeGeometry half = half_resolution(in6.geometry);
    if (psi.data.size() % ParamVolume::kChannels != 0 ||
        psi.data.size() / ParamVolume::kChannels != psi.geometry.voxel_count()) {
        throw Error(ErrorCode::ShapeMismatch, "parameter volume must have exactly 37 channels");
    }
    if (psi.geometry.dims != half.dims) {
        throw Error(ErrorCode::ShapeMismatch, "parameter volume dims must be half the input dims");
    }
}

}  // namespace

Scene decode_param_volume(const ParamVolume& psi, const InputVolume6& in6,
                          const LabelVolume& labels, const AgpConfig& config) {
    check_inputs(in6, labels);
    check_param_volume(psi, in6);
    const InputVolume6 in_half = downsample_half(in6);
    const LabelVolume labels_half = downsample_half(labels);
    Scene scene;
    scene.meta.grid = in_half.geometry;
    scene.meta.cov_scale = config.cov_scale.value_or(default_cov_scale(in_half.geometry));
    scene.meta.modulation = config.modulation;
    scene.gaussians = instantiate(
        labels_half, 1, [&](const std::array<int, 3>& idx, std::size_t v, std::uint8_t label) {
            Gaussian6D gs = primed_gaussian(in_half, in_half.geometry, idx, v, label, config.mu_d);
            for (int a = 0; a < 3; ++a) gs.mu_d[a] += psi.at(ParamVolume::kMuD + a, v);
            for (int s = 0; s < kShCount; ++s) gs.sh[static_cast<std::size_t>(s)] += psi.at(ParamVolume::kSh + s, v);
            gs.opacity_raw = in_half.at(InputVolume6::kAlpha, v) + psi.at(ParamVolume::kOpacity, v);
            for (int c = 0; c < kCovRawCount; ++c) gs.cov_raw[static_cast<std::size_t>(c)] = psi.at(ParamVolume::kCov + c, v);
            for (double x : gs.cov_raw) {
                if (!std::isfinite(x)) throw Error(ErrorCode::InvalidParameter, "non-finite parameter volume entry");
            }
            return gs;
        });
    if (scene.gaussians.empty()) throw Error(ErrorCode::EmptyScene, "no foreground voxels at half resolution");
    instrumentation().instantiations.fetch_add(1, std::memory_order_relaxed);
    return scene;
}

ParamVolume encode_param_volume(const Scene& scene, const InputVolume6& in6,
                                const LabelVolume& labels, const AgpConfig& config) {
    check_inputs(in6, labels);
    const InputVolume6 in_half = downsample_half(in6);
    const LabelVolume labels_half = downsample_half(labels);
    ParamVolume psi(in_half.geometry);
    std::size_t next = 0;
    for (std::size_t v = 0; v < labels_half.labels.size(); ++v) {
        if (labels_half.labels[v] == 0) continue;
        if (next >= scene.gaussians.size()) {
            throw Error(ErrorCode::ShapeMismatch, "scene has fewer Gaussians than foreground voxels");
        }
        const Gaussian6D& gs = scene.gaussians[next++];
        for (int a = 0; a < 3; ++a) psi.at(ParamVolume::kMuD + a, v) = gs.mu_d[a] - config.mu_d[a];
        for (int s = 0; s < kShCount; ++s) psi.at(ParamVolume::kSh + s, v) = gs.sh[static_cast<std::size_t>(s)];
        for (int ch = 0; ch < 3; ++ch) {
            psi.at(ParamVolume::kSh + ch, v) -= sh_dc_from_color(in_half.at(InputVolume6::kRed + ch, v));
        }
        psi.at(ParamVolume::kOpacity, v) = gs.opacity_raw - in_half.at(InputVolume6::kAlpha, v);
        for (int c = 0; c < kCovRawCount; ++c) psi.at(ParamVolume::kCov + c, v) = gs.cov_raw[static_cast<std::size_t>(c)];
    }
    if (next != scene.gaussians.size()) {
        throw Error(ErrorCode::ShapeMismatch, "scene has more Gaussians than foreground voxels");
    }
    return psi;
}

ParamVolume load_param_volume(const std::filesystem::path& path) {
    detail::Descriptor d = detail::read_descriptor(path);
    auto expect = [&](const char* key, const std::string& value) {
        auto it = d.extra.find(key);
        if (it == d.extra.end() || it->second != value) {
            throw Error(ErrorCode::MalformedFile, std::string("parameter volume needs ") + key + " = " + value);
        }
    };
    expect("type", "float32");
    expect("channels", std::to_string(ParamVolume::kChannels));
    expect("layout_version", std::to_string(kLayoutVersion));
    ParamVolume psi(d.geometry);
    const auto bytes = detail::read_payload(path, psi.data.size() * sizeof(float));
    std::vector<float> values(psi.data.size());
    std::memcpy(values.data(), bytes.data(), bytes.size());
    std::copy(values.begin(), values.end(), psi.data.begin());
    return psi;
}

void save_param_volume(const ParamVolume& psi, const std::filesystem::path& path) {
    detail::write_descriptor(path, {psi.geometry,
                                    {{"type", "float32"},
                                     {"channels", std::to_string(ParamVolume::kChannels)},
                                     {"layout_version", std::to_string(kLayoutVersion)}}});
    std::vector<float> values(psi.data.begin(), psi.data.end());
    detail::write_payload(path, values.data(), values.size() * sizeof(float));
}

}  // namespace splat6d
