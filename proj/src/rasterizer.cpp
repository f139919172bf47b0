#include "splat6d/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "splat6d/error.hpp"
#include "splat6d/parallel.hpp"

namespace splat6d {

namespace {

// Pixel index range [lo, hi] whose centers can fall within `radius` of `center`,
// widened by one pixel and clamped to [0, n - 1]. Empty when lo > hi.
std::pair<int, int> pixel_span(double center, double radius, int n) {
    const double lo = std::ceil(center - radius - 0.5) - 1.0;
    const double hi = std::floor(center + radius - 0.5) + 1.0;
    if (!(hi >= 0.0) || !(lo <= n - 1.0)) return {1, 0};
    return {static_cast<int>(std::max(lo, 0.0)), static_cast<int>(std::min(hi, n - 1.0))};
}

std::optional<Splat2D> project_impl(const Vec3& mu, const Mat3& sigma, double w,
                                    const Vec3& color, double opacity, const Camera& cam,
                                    const RasterConfig& cfg, std::uint32_t id, GaussianView* view) {
    const Vec3 t = cam.to_camera(mu);
    if (!(t.z() >= cam.near && t.z() <= cam.far)) return std::nullopt;
    const double f = cam.focal();
    const Vec2 c = cam.principal_point();
    const double inv_z = 1.0 / t.z();

    Splat2D s;
    s.mean = Vec2(f * t.x() * inv_z + c.x(), f * t.y() * inv_z + c.y());

    Eigen::Matrix<double, 2, 3> jac;
    jac << f * inv_z, 0.0, -f * t.x() * inv_z * inv_z,
           0.0, f * inv_z, -f * t.y() * inv_z * inv_z;
    const Mat3 cov_cam = cam.rotation * sigma * cam.rotation.transpose();
    s.cov = jac * cov_cam * jac.transpose();
    s.cov(0, 0) += cfg.lowpass;
    s.cov(1, 1) += cfg.lowpass;
    const double det = s.cov(0, 0) * s.cov(1, 1) - s.cov(0, 1) * s.cov(1, 0);
    if (!(det > 0.0)) return std::nullopt;
    s.conic = Vec3(s.cov(1, 1) / det, -s.cov(0, 1) / det, s.cov(0, 0) / det);

    const double raw_alpha = opacity * w;
    s.alpha = std::min(raw_alpha, cfg.max_alpha);
    if (!(s.alpha >= cfg.min_alpha)) return std::nullopt;

    const auto [x0, x1] = pixel_span(s.mean.x(), cfg.cutoff_sigma * std::sqrt(s.cov(0, 0)), cam.width);
    const auto [y0, y1] = pixel_span(s.mean.y(), cfg.cutoff_sigma * std::sqrt(s.cov(1, 1)), cam.height);
    if (x0 > x1 || y0 > y1) return std::nullopt;
    s.x0 = x0;
    s.x1 = x1;
    s.y0 = y0;
    s.y1 = y1;
    s.depth = t.z();
    s.color = color;
    s.gaussian_id = id;

    if (view) {
        view->visible = true;
        view->alpha_clamped = raw_alpha > cfg.max_alpha;
        view->t = t;
        view->jacobian = jac;
        view->cov_cam = cov_cam;
    }
    return s;
}

}  // namespace

std::optional<Splat2D> project_gaussian(const SlicedGaussian& sliced, const Vec3& color,
                                        double opacity, const Camera& cam,
                                        const RasterConfig& cfg, std::uint32_t id) {
    return project_impl(sliced.mu_p, sliced.sigma_pp, sliced.w, color, opacity, cam, cfg, id, nullptr);
}

std::optional<Splat2D> view_gaussian(const Gaussian6D& g, const SliceFactors& factors,
                                     const Camera& cam, const RasterConfig& cfg, std::uint32_t id,
                                     GaussianView* view) {
    const Vec3 r = g.mu_p - cam.position;
    const double distance = r.norm();
    if (!(distance > 0.0)) return std::nullopt;
    const Vec3 v = r / distance;
    const Vec3 offset = v - g.mu_d;
    const Vec3 mu = g.mu_p + factors.gain * offset;
    const double w = factors.density_norm * std::exp(-0.5 * offset.dot(factors.dd_inv * offset));
    const Vec3 color_raw = eval_sh_unclamped(g.sh, v);
    const Vec3 color = color_raw.cwiseMax(0.0).cwiseMin(1.0);
    const double opacity = sigmoid(g.opacity_raw);
    if (view) {
        *view = GaussianView{};
        view->v = v;
        view->distance = distance;
        view->offset = offset;
        view->mu = mu;
        view->w = w;
        view->opacity = opacity;
        view->color_raw = color_raw;
    }
    return project_impl(mu, factors.sigma_pp, w, color, opacity, cam, cfg, id, view);
}

TileBins bin_and_sort(std::span<const Splat2D> splats, int width, int height, int tile_size,
                      int threads) {
    TileBins bins;
    bins.tile_size = tile_size;
    bins.tiles_x = (width + tile_size - 1) / tile_size;
    bins.tiles_y = (height + tile_size - 1) / tile_size;
    const std::size_t n_tiles = static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y;
    bins.offsets.assign(n_tiles + 1, 0);

    auto for_each_tile = [&](const Splat2D& s, auto&& fn) {
        const int tx0 = s.x0 / tile_size, tx1 = s.x1 / tile_size;
        const int ty0 = s.y0 / tile_size, ty1 = s.y1 / tile_size;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) fn(static_cast<std::size_t>(ty) * bins.tiles_x + tx);
    };
    for (const auto& s : splats) for_each_tile(s, [&](std::size_t t) { ++bins.offsets[t + 1]; });
    for (std::size_t t = 0; t < n_tiles; ++t) bins.offsets[t + 1] += bins.offsets[t];
    bins.entries.resize(bins.offsets.back());
    std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
    for (std::size_t i = 0; i < splats.size(); ++i) {
        for_each_tile(splats[i], [&](std::size_t t) { bins.entries[cursor[t]++] = static_cast<std::uint32_t>(i); });
    }

    with_threads(threads, [&] {
        tbb::parallel_for(std::size_t{0}, n_tiles, [&](std::size_t t) {
            auto first = bins.entries.begin() + bins.offsets[t];
            auto last = bins.entries.begin() + bins.offsets[t + 1];
            std::sort(first, last, [&](std::uint32_t a, std::uint32_t b) {
                const Splat2D& sa = splats[a];
                const Splat2D& sb = splats[b];
                if (sa.depth != sb.depth) return sa.depth < sb.depth;
                return sa.gaussian_id < sb.gaussian_id;
            });
        });
    });
    return bins;
}

void composite_tile(std::span<const Splat2D> splats, std::span<const std::uint32_t> order,
                    const PixelRect& rect, const RasterConfig& cfg, Image& out,
                    std::vector<PixelState>* state) {
    const double cutoff2 = cfg.cutoff_sigma * cfg.cutoff_sigma;
    for (int py = rect.y0; py < rect.y1; ++py) {
        for (int px = rect.x0; px < rect.x1; ++px) {
            double T = 1.0;
            double rgb[3] = {0.0, 0.0, 0.0};
            double acc_alpha = 0.0;
            std::uint32_t visited = 0;
            for (std::uint32_t k = 0; k < order.size(); ++k) {
                visited = k + 1;
                const Splat2D& s = splats[order[k]];
                const double power = splat_power(s, px, py);
                if (power > cutoff2) continue;
                const double a = s.alpha * std::exp(-0.5 * power);
                if (a < cfg.min_alpha) continue;
                const double weight = a * T;
                rgb[0] += s.color[0] * weight;
                rgb[1] += s.color[1] * weight;
                rgb[2] += s.color[2] * weight;
                acc_alpha += weight;
                T *= 1.0 - a;
                if (T < cfg.min_transmittance) break;
            }
            out.at(px, py, 0) = rgb[0];
            out.at(px, py, 1) = rgb[1];
            out.at(px, py, 2) = rgb[2];
            out.at(px, py, 3) = acc_alpha;
            if (state) {
                auto& ps = (*state)[static_cast<std::size_t>(py) * out.width + px];
                ps.final_transmittance = T;
                ps.contributors = visited;
            }
        }
    }
}

PreparedScene prepare_scene(const Scene& scene, int threads) {
    PreparedScene p;
    p.scene = &scene;
    const std::size_t n = scene.gaussians.size();
    p.factors.resize(n);
    p.usable.assign(n, 1);
    std::atomic<std::size_t> degenerate{0};
    const SliceOptions opts{scene.meta.modulation};
    with_threads(threads, [&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const auto& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) {
                try {
                    const Covariance6 cov = build_covariance(scene.gaussians[i].cov_raw, scene.meta.cov_scale);
                    p.factors[i] = slice_factors(cov, opts);
                } catch (const Error&) {
                    p.usable[i] = 0;
                    degenerate.fetch_add(1, std::memory_order_relaxed);
                }
            }
        });
    });
    p.degenerate = degenerate.load();
    if (p.degenerate * 100 > n) {
        throw Error(ErrorCode::DegenerateCovariance,
                    std::to_string(p.degenerate) + " of " + std::to_string(n) +
                        " Gaussians have degenerate covariance");
    }
    instrumentation().preparations.fetch_add(1, std::memory_order_relaxed);
    return p;
}

Image render(const PreparedScene& prepared, const Camera& cam, const RenderOptions& options,
             ForwardState* state) {
    cam.validate();
    const Scene& scene = *prepared.scene;
    const std::size_t n = scene.gaussians.size();
    const RasterConfig& cfg = options.raster;

    std::vector<Splat2D> slots(n);
    std::vector<std::uint8_t> visible(n, 0);
    if (state) {
        state->camera = cam;
        state->options = options;
        state->views.assign(n, GaussianView{});
    }
    Image image(cam.width, cam.height, 4);
    with_threads(options.threads, [&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, 256), [&](const auto& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) {
                const Gaussian6D& g = scene.gaussians[i];
                if (!prepared.usable[i] || !options.mask.test(g.label)) continue;
                auto s = view_gaussian(g, prepared.factors[i], cam, cfg, static_cast<std::uint32_t>(i),
                                       state ? &state->views[i] : nullptr);
                if (s) {
                    slots[i] = *s;
                    visible[i] = 1;
                } else if (state) {
                    state->views[i].visible = false;
                }
            }
        });
    });

    std::vector<Splat2D> splats;
    splats.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (visible[i]) splats.push_back(slots[i]);
    }
    TileBins bins = bin_and_sort(splats, cam.width, cam.height, cfg.tile_size, options.threads);

    std::vector<PixelState>* pixel_state = nullptr;
    if (state) {
        state->pixels.assign(image.pixel_count(), PixelState{});
        pixel_state = &state->pixels;
    }
    const int n_tiles = bins.tiles_x * bins.tiles_y;
    with_threads(options.threads, [&] {
        tbb::parallel_for(0, n_tiles, [&](int t) {
            const int tx = t % bins.tiles_x;
            const int ty = t / bins.tiles_x;
            const PixelRect rect{tx * cfg.tile_size, ty * cfg.tile_size,
                                 std::min((tx + 1) * cfg.tile_size, cam.width),
                                 std::min((ty + 1) * cfg.tile_size, cam.height)};
            composite_tile(splats, bins.tile(t), rect, cfg, image, pixel_state);
        });
    });
    if (state) {
        state->splats = std::move(splats);
        state->bins = std::move(bins);
    }
    return image;
}

Image render(const Scene& scene, const Camera& cam, const RenderOptions& options) {
    const PreparedScene prepared = prepare_scene(scene, options.threads);
    return render(prepared, cam, options);
}

}  // namespace splat6d
