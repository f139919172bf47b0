#pragma once

#include <filesystem>

#include "splat6d/scene.hpp"

namespace splat6d {

inline constexpr std::uint32_t kSceneFormatVersion = 1;
inline constexpr std::size_t kSceneRecordSize = 168;

/// Little-endian binary scene: "G6DS", u32 version, u64 count, grid and
/// covariance metadata, then one 168-byte record per Gaussian (parameters as
/// f32, label u8, zero padding). Doubles are narrowed to f32.
void save_scene(const Scene& scene, const std::filesystem::path& path);

/// Throws MalformedFile on bad magic, unknown version or a payload whose size
/// disagrees with the declared count; Io when the file cannot be read.
Scene load_scene(const std::filesystem::path& path);

}  // namespace splat6d
