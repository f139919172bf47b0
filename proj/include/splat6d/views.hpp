#pragma once

#include <filesystem>
#include <vector>

#include "splat6d/finetune.hpp"

namespace splat6d {

/// One entry of a views manifest.
struct ViewSpec {
    Vec3 eye = Vec3::Zero();
    Vec3 target = Vec3::Zero();
    Vec3 up{0.0, 1.0, 0.0};
    double fov_y = 0.8;
    int width = 256;
    int height = 256;
    std::filesystem::path image;  // resolved against the manifest directory

    Camera camera() const;
};

/// JSON array of {eye, target, up, fov, width, height, image}.
std::vector<ViewSpec> load_views_manifest(const std::filesystem::path& path);
void save_views_manifest(const std::vector<ViewSpec>& views, const std::filesystem::path& path);

/// Reads each view's image. Throws ShapeMismatch when an image disagrees with its camera size.
std::vector<TrainingView> load_training_views(const std::vector<ViewSpec>& specs);

/// `count` cameras on a ring around `target` at `radius`, elevation `elevation` (radians).
std::vector<ViewSpec> orbit_views(const Vec3& target, double radius, int count, double elevation,
                                  double phase, int width, int height, double fov_y);

}  // namespace splat6d
