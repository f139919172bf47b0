#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "splat6d/gauss6d.hpp"

namespace splat6d {

/// Colors in 0..255, alpha in 0..1.
using Rgba = std::array<double, 4>;

struct TfPoint {
    double hu = 0.0;
    Rgba rgba{};
};

/// Piecewise-linear HU -> RGBA map.
struct TransferFunction {
    std::vector<TfPoint> points;

    /// Throws InvalidParameter unless HU is strictly increasing and values are in range.
    void validate() const;

    /// Linear interpolation per channel; clamps to the end points outside the
    /// table. Control points are reproduced exactly.
    Rgba eval(double hu) const;
};

/// One transfer function per consolidated group.
struct TransferFunctionSet {
    std::string name;
    std::array<TransferFunction, kNumGroups> groups;

    const TransferFunction& operator[](int group) const { return groups.at(static_cast<std::size_t>(group)); }
};

TransferFunctionSet parse_transfer_functions(std::string_view text);
std::string format_transfer_functions(const TransferFunctionSet& set);
TransferFunctionSet load_transfer_functions(const std::filesystem::path& path);

/// Built-in presets: "seen_tf" and "unseen_tf".
const std::vector<std::string>& preset_names();
const TransferFunctionSet& builtin_preset(std::string_view name);

/// A preset name or a path to a transfer-function file.
TransferFunctionSet resolve_transfer_functions(const std::string& name_or_path);

}  // namespace splat6d
