#include "splat6d/phantom.hpp"

#include <cmath>

#include "splat6d/error.hpp"
#include "splat6d/labels.hpp"

namespace splat6d {

namespace {

// Squared normalized radius of p in an axis-aligned ellipsoid.
double ellipsoid(const Vec3& p, const Vec3& center, const Vec3& radii) {
    return ((p - center).array() / radii.array()).square().sum();
}

}  // namespace

Phantom make_phantom(const PhantomConfig& config) {
    if (config.size < 8 || !(config.spacing > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "phantom needs size >= 8 and positive spacing");
    }
    VolumeGeometry g;
    g.dims = {config.size, config.size, config.size};
    g.spacing = Vec3::Constant(config.spacing);
    g.origin = Vec3::Constant(-0.5 * (config.size - 1) * config.spacing);

    Phantom ph;
    ph.ct.geometry = g;
    ph.ct.hu.assign(g.voxel_count(), -1000.0);
    ph.labels.geometry = g;
    ph.labels.consolidated = true;
    ph.labels.labels.assign(g.voxel_count(), 0);

    const double half = 0.5 * (config.size - 1) * config.spacing;
    const Vec3 torso(0.85 * half, 0.9 * half, 0.65 * half);
    for (int k = 0; k < config.size; ++k) {
        for (int j = 0; j < config.size; ++j) {
            for (int i = 0; i < config.size; ++i) {
                const Vec3 p = g.origin + config.spacing * Vec3(i, j, k);
                const std::size_t v = g.linear_index(i, j, k);
                const double outer = ellipsoid(p, Vec3::Zero(), torso);
                const double inner = ellipsoid(p, Vec3::Zero(), 0.82 * torso);
                const bool rib_band = std::sin(p.y() * 2.0 * M_PI / (0.3 * half)) > -0.2;
                const double spine = ellipsoid(p, Vec3(0.0, 0.0, 0.45 * half), Vec3(0.12 * half, 0.9 * half, 0.1 * half));
                const double liver = ellipsoid(p, Vec3(-0.25 * half, 0.3 * half, 0.0), Vec3(0.4 * half, 0.3 * half, 0.35 * half));
                const double lung_l = ellipsoid(p, Vec3(-0.35 * half, -0.35 * half, 0.0), Vec3(0.28 * half, 0.4 * half, 0.32 * half));
                const double lung_r = ellipsoid(p, Vec3(0.35 * half, -0.35 * half, 0.0), Vec3(0.28 * half, 0.4 * half, 0.32 * half));

                if ((outer <= 1.0 && inner > 1.0 && rib_band) || spine <= 1.0) {
                    ph.labels.labels[v] = kSkeleton;
                    ph.ct.hu[v] = 450.0 + 350.0 * (p.y() / half);
                } else if (liver <= 1.0) {
                    ph.labels.labels[v] = kLiver;
                    ph.ct.hu[v] = 160.0 + 80.0 * (p.x() / half) - 60.0 * liver;
                } else if (lung_l <= 1.0 || lung_r <= 1.0) {
                    ph.labels.labels[v] = kLung;
                    ph.ct.hu[v] = -700.0 + 200.0 * std::min(lung_l, lung_r);
                } else if (outer <= 1.0) {
                    ph.ct.hu[v] = 30.0;  // soft tissue, unlabeled
                }
            }
        }
    }
    return ph;
}

}  // namespace splat6d
