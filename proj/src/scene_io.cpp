#include "splat6d/scene_io.hpp"

#include <cstring>

#include "binary_io.hpp"
#include "splat6d/backward.hpp"
#include "splat6d/error.hpp"

namespace splat6d {

namespace {

constexpr char kMagic[4] = {'G', '6', 'D', 'S'};

struct Record {
    float params[kParamsPerGaussian];
    std::uint8_t label;
    std::uint8_t padding[7];
};
static_assert(sizeof(Record) == kSceneRecordSize);

}  // namespace

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    detail::BinaryWriter w(path.string());
    w.bytes(kMagic, 4);
    w.put(kSceneFormatVersion);
    w.put(static_cast<std::uint64_t>(scene.size()));
    const auto& m = scene.meta;
    for (int a = 0; a < 3; ++a) w.put(static_cast<std::uint32_t>(m.grid.dims[a]));
    for (int a = 0; a < 3; ++a) w.put(m.grid.spacing[a]);
    for (int a = 0; a < 3; ++a) w.put(m.grid.origin[a]);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) w.put(m.grid.direction(r, c));
    w.put(m.cov_scale.spatial);
    w.put(m.cov_scale.directional);
    w.put(static_cast<std::uint32_t>(m.modulation));
    w.put(m.layout_version);

    std::vector<Record> records(scene.size());
    double params[kParamsPerGaussian];
    for (std::size_t i = 0; i < scene.size(); ++i) {
        pack_parameters(scene.gaussians[i], std::span<double, kParamsPerGaussian>(params, kParamsPerGaussian));
        Record& r = records[i];
        std::memset(&r, 0, sizeof r);
        for (int p = 0; p < kParamsPerGaussian; ++p) r.params[p] = static_cast<float>(params[p]);
        r.label = scene.gaussians[i].label;
    }
    w.bytes(records.data(), records.size() * sizeof(Record));
    w.finish(path.string());
}

Scene load_scene(const std::filesystem::path& path) {
    detail::BinaryReader r(path.string());
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::MalformedFile, "not a scene file: " + path.string());
    const auto version = r.get<std::uint32_t>();
    if (version != kSceneFormatVersion) {
        throw Error(ErrorCode::MalformedFile, "unsupported scene format version " + std::to_string(version));
    }
    const auto count = r.get<std::uint64_t>();
    Scene scene;
    auto& m = scene.meta;
    for (int a = 0; a < 3; ++a) m.grid.dims[a] = static_cast<int>(r.get<std::uint32_t>());
    for (int a = 0; a < 3; ++a) m.grid.spacing[a] = r.get<double>();
    for (int a = 0; a < 3; ++a) m.grid.origin[a] = r.get<double>();
    for (int row = 0; row < 3; ++row)
        for (int c = 0; c < 3; ++c) m.grid.direction(row, c) = r.get<double>();
    m.cov_scale.spatial = r.get<double>();
    m.cov_scale.directional = r.get<double>();
    const auto modulation = r.get<std::uint32_t>();
    if (modulation > 1) throw Error(ErrorCode::MalformedFile, "unknown opacity modulation");
    m.modulation = static_cast<OpacityModulation>(modulation);
    m.layout_version = r.get<std::uint32_t>();
    if (m.layout_version != kLayoutVersion) throw Error(ErrorCode::MalformedFile, "unsupported parameter layout version");

    if (r.remaining() != count * kSceneRecordSize) {
        throw Error(ErrorCode::MalformedFile, "scene payload holds " + std::to_string(r.remaining()) +
                                                  " bytes, header declares " + std::to_string(count) + " records");
    }
    scene.gaussians.resize(count);
    Record rec;
    double params[kParamsPerGaussian];
    for (std::size_t i = 0; i < count; ++i) {
        r.bytes(&rec, sizeof rec);
        for (int p = 0; p < kParamsPerGaussian; ++p) params[p] = rec.params[p];
        unpack_parameters(std::span<const double, kParamsPerGaussian>(params, kParamsPerGaussian), scene.gaussians[i]);
        if (rec.label >= kNumGroups) throw Error(ErrorCode::MalformedFile, "Gaussian label out of range");
        scene.gaussians[i].label = rec.label;
    }
    return scene;
}

}  // namespace splat6d
