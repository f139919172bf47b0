#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "splat6d/volume.hpp"

// Sidecar descriptors shared by the volume and parameter-volume formats:
// `<name>.meta` holds UTF-8 `key = value` lines, `<name>.raw` the payload.
namespace splat6d::detail {

struct Descriptor {
    VolumeGeometry geometry;
    std::map<std::string, std::string> extra;  // keys other than dims/spacing/origin/direction
};

std::filesystem::path base_of(const std::filesystem::path& p);
std::filesystem::path meta_path(const std::filesystem::path& base);
std::filesystem::path raw_path(const std::filesystem::path& base);

Descriptor read_descriptor(const std::filesystem::path& path);
void write_descriptor(const std::filesystem::path& path, const Descriptor& d);

/// Reads the whole payload, checking its size against `expected_bytes`.
std::vector<char> read_payload(const std::filesystem::path& path, std::size_t expected_bytes);
void write_payload(const std::filesystem::path& path, const void* data, std::size_t bytes);

}  // namespace splat6d::detail
