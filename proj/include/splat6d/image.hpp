#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "splat6d/gauss6d.hpp"

namespace splat6d {

/// Interleaved floating-point image. Renders are 4-channel: RGB accumulated
/// over transparent black plus coverage alpha.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// RGB = C + (1 - A) * background for a 4-channel render.
Image composite_over(const Image& rgba, const Vec3& background);

/// 8-bit quantization, round(clamp(x, 0, 1) * 255).
std::uint8_t to_byte(double x);

/// Encodes a 3- or 4-channel image as 8-bit RGBA PNG (opaque when 3-channel).
std::vector<std::uint8_t> encode_png(const Image& img);
/// Decodes any 8-bit PNG into a 3-channel RGB image in [0, 1]; alpha is dropped.
Image decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace splat6d
