#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splat6d/camera.hpp"
#include "splat6d/image.hpp"
#include "splat6d/scene.hpp"

namespace splat6d {

struct RasterConfig {
    int tile_size = 16;
    double lowpass = 0.3;            // added to the 2D covariance diagonal, pixels^2
    double cutoff_sigma = 3.0;       // splat support, in standard deviations
    double max_alpha = 0.99;
    double min_alpha = 1.0 / 255.0;  // per-pixel contributions below this are skipped
    double min_transmittance = 1e-4; // compositing stops once T falls below this
};

struct RenderOptions {
    GroupMask mask = all_groups();
    int threads = 0;  // 0: scheduler default
    RasterConfig raster;
};

/// A projected, view-conditioned Gaussian.
struct Splat2D {
    Vec2 mean;            // pixels
    Mat2 cov;             // low-pass regularized
    Vec3 conic;           // (Q00, Q01, Q11) of cov^-1
    double depth = 0.0;   // camera-space z of the sliced mean
    Vec3 color;           // clamped RGB
    double alpha = 0.0;   // min(opacity * w, max_alpha)
    std::uint32_t gaussian_id = 0;
    // Inclusive pixel range that can receive a contribution (with one pixel of slack).
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

/// EWA projection of a sliced Gaussian. Returns nullopt when culled by the
/// clip range, the viewport, or an opacity below the per-pixel threshold.
std::optional<Splat2D> project_gaussian(const SlicedGaussian& sliced, const Vec3& color,
                                        double opacity, const Camera& cam,
                                        const RasterConfig& cfg = {}, std::uint32_t id = 0);

/// Mahalanobis distance squared of pixel (px, py) under a splat. The single
/// definition shared by compositing, backward and tests.
inline double splat_power(const Splat2D& s, int px, int py) {
    const double dx = (px + 0.5) - s.mean.x();
    const double dy = (py + 0.5) - s.mean.y();
    return s.conic[0] * dx * dx + s.conic[2] * dy * dy + 2.0 * s.conic[1] * dx * dy;
}

/// Per-tile, depth-ordered splat lists in CSR form.
struct TileBins {
    int tiles_x = 0;
    int tiles_y = 0;
    int tile_size = 16;
    std::vector<std::uint32_t> offsets;  // tiles_x * tiles_y + 1
    std::vector<std::uint32_t> entries;  // indices into the splat array

    std::span<const std::uint32_t> tile(int t) const {
        return {entries.data() + offsets[static_cast<std::size_t>(t)],
                offsets[static_cast<std::size_t>(t) + 1] - offsets[static_cast<std::size_t>(t)]};
    }
};

/// Each splat goes to every tile its support rectangle touches; within a tile
/// the order is ascending depth with ties broken by gaussian_id.
TileBins bin_and_sort(std::span<const Splat2D> splats, int width, int height, int tile_size = 16,
                      int threads = 0);

/// Per-pixel state kept by the forward pass for the backward pass.
struct PixelState {
    double final_transmittance = 1.0;
    std::uint32_t contributors = 0;  // entries of the tile list visited
};

struct PixelRect {
    int x0, y0, x1, y1;  // half-open
};

/// Front-to-back compositing of `order` (indices into `splats`) over `rect`.
/// Writes RGBA into `out` (4 channels) and, when given, per-pixel state.
void composite_tile(std::span<const Splat2D> splats, std::span<const std::uint32_t> order,
                    const PixelRect& rect, const RasterConfig& cfg, Image& out,
                    std::vector<PixelState>* state = nullptr);

/// View-independent per-Gaussian data, built once per scene.
struct PreparedScene {
    const Scene* scene = nullptr;
    std::vector<SliceFactors> factors;
    std::vector<std::uint8_t> usable;  // 0 when the covariance is degenerate
    std::size_t degenerate = 0;
};

/// Throws DegenerateCovariance when more than 1% of the Gaussians are
/// degenerate; otherwise they are skipped and counted. The scene must outlive
/// the result.
PreparedScene prepare_scene(const Scene& scene, int threads = 0);
PreparedScene prepare_scene(Scene&&, int = 0) = delete;

/// Everything the forward pass knows about one Gaussian for one view.
struct GaussianView {
    bool visible = false;
    Vec3 v;               // view direction
    double distance = 0;  // |mu_p - camera|
    Vec3 offset;          // v - mu_d
    Vec3 mu;              // sliced mean
    double w = 0;         // opacity modulation
    double opacity = 0;   // sigmoid(opacity_raw)
    bool alpha_clamped = false;
    Vec3 color_raw;       // before clamping
    Vec3 t;               // camera-space sliced mean
    Eigen::Matrix<double, 2, 3> jacobian;
    Mat3 cov_cam;         // W Sigma' W^T
};

/// Slices, shades and projects one Gaussian. Returns the splat when visible.
std::optional<Splat2D> view_gaussian(const Gaussian6D& g, const SliceFactors& factors,
                                     const Camera& cam, const RasterConfig& cfg, std::uint32_t id,
                                     GaussianView* view = nullptr);

/// Forward-pass record used by the backward pass.
struct ForwardState {
    Camera camera;
    RenderOptions options;
    std::vector<GaussianView> views;  // per scene Gaussian
    std::vector<Splat2D> splats;
    TileBins bins;
    std::vector<PixelState> pixels;   // row-major
};

/// Full pipeline: mask filter, slicing, SH color, projection, binning, compositing.
/// Deterministic for any thread count.
Image render(const PreparedScene& prepared, const Camera& cam, const RenderOptions& options = {},
             ForwardState* state = nullptr);

Image render(const Scene& scene, const Camera& cam, const RenderOptions& options = {});

}  // namespace splat6d
