#pragma once

#include "splat6d/gauss6d.hpp"

namespace splat6d {

/// Pinhole camera. Camera space is x right, y down, z forward; pixel (x, y)
/// samples the image plane at (x + 0.5, y + 0.5) and the optical axis hits
/// (width / 2, height / 2).
struct Camera {
    Vec3 position = Vec3::Zero();
    Mat3 rotation = Mat3::Identity();  // world-to-camera
    double fov_y = 0.8;                // radians
    int width = 64;
    int height = 64;
    double near = 0.1;   // mm
    double far = 1e5;    // mm

    double focal() const;
    Vec2 principal_point() const { return {0.5 * width, 0.5 * height}; }
    Vec3 to_camera(const Vec3& world) const { return rotation * (world - position); }

    /// Throws InvalidParameter on a non-orthonormal rotation, bad clip range,
    /// fov outside (0, pi) or an empty viewport.
    void validate() const;

    /// Throws DegenerateGeometry when eye == target or up is parallel to the view direction.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                          int width, int height);
};

}  // namespace splat6d
