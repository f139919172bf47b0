#include "splat6d/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <string>

#include <Eigen/LU>
#include <tbb/parallel_for.h>

#include "descriptor.hpp"
#include "splat6d/error.hpp"

namespace splat6d {

namespace fs = std::filesystem;

void VolumeGeometry::validate() const {
    for (int d : dims) {
        if (d <= 0) throw Error(ErrorCode::InvalidParameter, "volume dims must be positive");
    }
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0.0)) throw Error(ErrorCode::InvalidParameter, "spacing must be positive");
    }
    if (std::abs(std::abs(direction.determinant()) - 1.0) > 1e-6 ||
        !(direction.transpose() * direction).isApprox(Mat3::Identity(), 1e-6)) {
        throw Error(ErrorCode::InvalidParameter, "direction matrix is not orthonormal");
    }
}

namespace {

// Payloads are little-endian; every supported host is too.
static_assert(std::endian::native == std::endian::little);

struct RawVolumeFile {
    detail::Descriptor descriptor;
    std::vector<std::int16_t> values;
};

RawVolumeFile read_raw_volume(const fs::path& path) {
    RawVolumeFile out;
    out.descriptor = detail::read_descriptor(path);
    const std::size_t n = out.descriptor.geometry.voxel_count();
    const auto bytes = detail::read_payload(path, n * sizeof(std::int16_t));
    out.values.resize(n);
    std::memcpy(out.values.data(), bytes.data(), bytes.size());
    return out;
}

void write_raw_volume(const fs::path& path, const VolumeGeometry& g,
                      const std::vector<std::int16_t>& values,
                      std::map<std::string, std::string> extra) {
    detail::write_descriptor(path, {g, std::move(extra)});
    detail::write_payload(path, values.data(), values.size() * sizeof(std::int16_t));
}

}  // namespace

CtVolume load_volume(const fs::path& path) {
    RawVolumeFile f = read_raw_volume(path);
    CtVolume vol;
    vol.geometry = f.descriptor.geometry;
    vol.hu.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        vol.hu[i] = std::clamp(static_cast<double>(f.values[i]), kHuMin, kHuMax);
    }
    return vol;
}

void save_volume(const CtVolume& vol, const fs::path& path) {
    vol.geometry.validate();
    if (vol.hu.size() != vol.geometry.voxel_count()) {
        throw Error(ErrorCode::ShapeMismatch, "intensity count does not match dims");
    }
    std::vector<std::int16_t> values(vol.hu.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<std::int16_t>(std::lround(std::clamp(vol.hu[i], -32768.0, 32767.0)));
    }
    write_raw_volume(path, vol.geometry, values, {});
}

LabelVolume load_labels(const fs::path& path) {
    RawVolumeFile f = read_raw_volume(path);
    LabelVolume out;
    out.geometry = f.descriptor.geometry;
    if (auto it = f.descriptor.extra.find("label_kind"); it != f.descriptor.extra.end()) {
        if (it->second == "consolidated") {
            out.consolidated = true;
        } else if (it->second != "raw") {
            throw Error(ErrorCode::MalformedFile, "label_kind must be raw or consolidated");
        }
    }
    const int max_label = out.consolidated ? kNumGroups - 1 : 119;
    out.labels.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] < 0 || f.values[i] > max_label) {
            throw Error(ErrorCode::UnknownLabel, "label " + std::to_string(f.values[i]) +
                                                     " out of range");
        }
        out.labels[i] = static_cast<std::uint8_t>(f.values[i]);
    }
    return out;
}

void save_labels(const LabelVolume& labels, const fs::path& path) {
    labels.geometry.validate();
    if (labels.labels.size() != labels.geometry.voxel_count()) {
        throw Error(ErrorCode::ShapeMismatch, "label count does not match dims");
    }
    std::vector<std::int16_t> values(labels.labels.begin(), labels.labels.end());
    write_raw_volume(path, labels.geometry, values,
                     {{"label_kind", labels.consolidated ? "consolidated" : "raw"}});
}

namespace {

VolumeGeometry isotropic_geometry(const VolumeGeometry& in, double target) {
    if (!(target > 0.0)) throw Error(ErrorCode::InvalidParameter, "target spacing must be positive");
    VolumeGeometry out = in;
    for (int a = 0; a < 3; ++a) {
        const double extent = (in.dims[a] - 1) * in.spacing[a];
        out.dims[a] = static_cast<int>(std::floor(extent / target + 1e-9)) + 1;
        out.spacing[a] = target;
    }
    return out;
}

// Position of output index `i` in input index units along one axis.
struct AxisSample {
    int i0 = 0;
    int i1 = 0;
    double frac = 0.0;
};

std::vector<AxisSample> axis_samples(int n_out, int n_in, double ratio) {
    std::vector<AxisSample> s(n_out);
    for (int i = 0; i < n_out; ++i) {
        const double x = std::min(i * ratio, static_cast<double>(n_in - 1));
        const int i0 = std::min(static_cast<int>(std::floor(x)), n_in - 1);
        s[i].i0 = i0;
        s[i].i1 = std::min(i0 + 1, n_in - 1);
        s[i].frac = x - i0;
    }
    return s;
}

}  // namespace

CtVolume resample_isotropic(const CtVolume& vol, double target_mm) {
    CtVolume out;
    out.geometry = isotropic_geometry(vol.geometry, target_mm);
    const auto& gi = vol.geometry;
    const auto& go = out.geometry;
    std::array<std::vector<AxisSample>, 3> ax;
    for (int a = 0; a < 3; ++a) ax[a] = axis_samples(go.dims[a], gi.dims[a], target_mm / gi.spacing[a]);
    out.hu.resize(go.voxel_count());
    tbb::parallel_for(0, go.dims[2], [&](int k) {
        const AxisSample& sz = ax[2][k];
        for (int j = 0; j < go.dims[1]; ++j) {
            const AxisSample& sy = ax[1][j];
            for (int i = 0; i < go.dims[0]; ++i) {
                const AxisSample& sx = ax[0][i];
                auto lerp_x = [&](int jj, int kk) {
                    const double a = vol.at(sx.i0, jj, kk);
                    const double b = vol.at(sx.i1, jj, kk);
                    return a + (b - a) * sx.frac;
                };
                const double c00 = lerp_x(sy.i0, sz.i0);
                const double c10 = lerp_x(sy.i1, sz.i0);
                const double c01 = lerp_x(sy.i0, sz.i1);
                const double c11 = lerp_x(sy.i1, sz.i1);
                const double c0 = c00 + (c10 - c00) * sy.frac;
                const double c1 = c01 + (c11 - c01) * sy.frac;
                out.hu[go.linear_index(i, j, k)] = c0 + (c1 - c0) * sz.frac;
            }
        }
    });
    return out;
}

LabelVolume resample_isotropic(const LabelVolume& labels, double target_mm) {
    LabelVolume out;
    out.consolidated = labels.consolidated;
    out.geometry = isotropic_geometry(labels.geometry, target_mm);
    const auto& gi = labels.geometry;
    const auto& go = out.geometry;
    std::array<std::vector<int>, 3> nearest;
    for (int a = 0; a < 3; ++a) {
        nearest[a].resize(go.dims[a]);
        const double ratio = target_mm / gi.spacing[a];
        for (int i = 0; i < go.dims[a]; ++i) {
            nearest[a][i] = std::min(static_cast<int>(std::lround(i * ratio)), gi.dims[a] - 1);
        }
    }
    out.labels.resize(go.voxel_count());
    tbb::parallel_for(0, go.dims[2], [&](int k) {
        for (int j = 0; j < go.dims[1]; ++j)
            for (int i = 0; i < go.dims[0]; ++i)
                out.labels[go.linear_index(i, j, k)] =
                    labels.at(nearest[0][i], nearest[1][j], nearest[2][k]);
    });
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw Error(ErrorCode::DegenerateVolume, "no voxels for percentile");
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double a = values[lo];
    if (frac == 0.0 || lo + 1 >= values.size()) return a;
    const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return a + (b - a) * frac;
}

HuNormalization hu_normalization(const CtVolume& vol, const LabelVolume* mask) {
    std::vector<double> fg;
    if (mask) {
        if (mask->geometry.dims != vol.geometry.dims) {
            throw Error(ErrorCode::ShapeMismatch, "mask dims differ from volume dims");
        }
        for (std::size_t i = 0; i < vol.hu.size(); ++i) {
            if (mask->labels[i] != 0) fg.push_back(vol.hu[i]);
        }
    } else {
        fg = vol.hu;
    }
    if (fg.empty()) throw Error(ErrorCode::DegenerateVolume, "no foreground voxels");
    HuNormalization n;
    n.clip_lo = percentile(fg, 0.5);
    n.clip_hi = percentile(fg, 99.5);
    double sum = 0.0;
    for (double& x : fg) {
        x = std::clamp(x, n.clip_lo, n.clip_hi);
        sum += x;
    }
    n.mean = sum / static_cast<double>(fg.size());
    double ss = 0.0;
    for (double x : fg) ss += (x - n.mean) * (x - n.mean);
    n.stddev = std::sqrt(ss / static_cast<double>(fg.size()));
    if (!(n.stddev > 0.0)) throw Error(ErrorCode::DegenerateVolume, "zero variance after clipping");
    return n;
}

CtVolume normalize_hu(const CtVolume& vol, const LabelVolume* mask) {
    const HuNormalization n = hu_normalization(vol, mask);
    CtVolume out;
    out.geometry = vol.geometry;
    out.hu.resize(vol.hu.size());
    for (std::size_t i = 0; i < vol.hu.size(); ++i) {
        out.hu[i] = (std::clamp(vol.hu[i], n.clip_lo, n.clip_hi) - n.mean) / n.stddev;
    }
    return out;
}

}  // namespace splat6d
