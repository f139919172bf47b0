#include "splat6d/backward.hpp"

#include <algorithm>
#include <cmath>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "splat6d/error.hpp"
#include "splat6d/parallel.hpp"

namespace splat6d {

void pack_parameters(const Gaussian6D& g, std::span<double, kParamsPerGaussian> out) {
    for (int a = 0; a < 3; ++a) {
        out[kParamMuP + a] = g.mu_p[a];
        out[kParamMuD + a] = g.mu_d[a];
    }
    std::copy(g.cov_raw.begin(), g.cov_raw.end(), out.begin() + kParamCov);
    std::copy(g.sh.begin(), g.sh.end(), out.begin() + kParamSh);
    out[kParamOpacity] = g.opacity_raw;
}

void unpack_parameters(std::span<const double, kParamsPerGaussian> in, Gaussian6D& g) {
    for (int a = 0; a < 3; ++a) {
        g.mu_p[a] = in[kParamMuP + a];
        g.mu_d[a] = in[kParamMuD + a];
    }
    std::copy(in.begin() + kParamCov, in.begin() + kParamCov + kCovRawCount, g.cov_raw.begin());
    std::copy(in.begin() + kParamSh, in.begin() + kParamSh + kShCount, g.sh.begin());
    g.opacity_raw = in[kParamOpacity];
}

bool GradientBuffer::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

namespace {

constexpr int kSplatGradSize = 9;  // mean 2, conic 3, color 3, alpha 1

}  // namespace

std::vector<SplatGradient> composite_backward(const ForwardState& forward, const Image& d_rgba) {
    const Camera& cam = forward.camera;
    if (d_rgba.width != cam.width || d_rgba.height != cam.height || d_rgba.channels != 4) {
        throw Error(ErrorCode::ShapeMismatch, "render gradient must match the render shape");
    }
    const RasterConfig& cfg = forward.options.raster;
    const TileBins& bins = forward.bins;
    const auto& splats = forward.splats;
    const int n_tiles = bins.tiles_x * bins.tiles_y;
    const double cutoff2 = cfg.cutoff_sigma * cfg.cutoff_sigma;

    // Tile-local accumulators, one slot per tile entry, merged in tile order afterwards.
    std::vector<double> local(bins.entries.size() * kSplatGradSize, 0.0);

    with_threads(forward.options.threads, [&] {
        tbb::parallel_for(0, n_tiles, [&](int t) {
            const auto order = bins.tile(t);
            double* acc = local.data() + static_cast<std::size_t>(bins.offsets[t]) * kSplatGradSize;
            const int tx = t % bins.tiles_x;
            const int ty = t / bins.tiles_x;
            const int x_end = std::min((tx + 1) * bins.tile_size, cam.width);
            const int y_end = std::min((ty + 1) * bins.tile_size, cam.height);
            for (int py = ty * bins.tile_size; py < y_end; ++py) {
                for (int px = tx * bins.tile_size; px < x_end; ++px) {
                    const PixelState& ps = forward.pixels[static_cast<std::size_t>(py) * cam.width + px];
                    const double dC[3] = {d_rgba.at(px, py, 0), d_rgba.at(px, py, 1), d_rgba.at(px, py, 2)};
                    const double dA = d_rgba.at(px, py, 3);
                    double T = ps.final_transmittance;
                    double behind_c[3] = {0.0, 0.0, 0.0};
                    double behind_a = 0.0;
                    for (std::uint32_t k = ps.contributors; k-- > 0;) {
                        const Splat2D& s = splats[order[k]];
                        const double power = splat_power(s, px, py);
                        if (power > cutoff2) continue;
                        const double G = std::exp(-0.5 * power);
                        const double a = s.alpha * G;
                        if (a < cfg.min_alpha) continue;
                        const double T_i = T / (1.0 - a);
                        const double weight = a * T_i;
                        double dL_da = dA * (T_i - behind_a / (1.0 - a));
                        double* g = acc + static_cast<std::size_t>(k) * kSplatGradSize;
                        for (int c = 0; c < 3; ++c) {
                            dL_da += dC[c] * (s.color[c] * T_i - behind_c[c] / (1.0 - a));
                            g[5 + c] += dC[c] * weight;
                            behind_c[c] += s.color[c] * weight;
                        }
                        behind_a += weight;
                        T = T_i;

                        const double dm = -0.5 * dL_da * a;
                        const double dx = (px + 0.5) - s.mean.x();
                        const double dy = (py + 0.5) - s.mean.y();
                        g[0] += -2.0 * dm * (s.conic[0] * dx + s.conic[1] * dy);
                        g[1] += -2.0 * dm * (s.conic[2] * dy + s.conic[1] * dx);
                        g[2] += dm * dx * dx;
                        g[3] += dm * 2.0 * dx * dy;
                        g[4] += dm * dy * dy;
                        g[8] += dL_da * G;
                    }
                }
            }
        });
    });

    std::vector<SplatGradient> out(splats.size());
    for (std::size_t e = 0; e < bins.entries.size(); ++e) {
        const double* g = local.data() + e * kSplatGradSize;
        SplatGradient& sg = out[bins.entries[e]];
        sg.mean += Vec2(g[0], g[1]);
        sg.conic += Vec3(g[2], g[3], g[4]);
        sg.color += Vec3(g[5], g[6], g[7]);
        sg.alpha += g[8];
    }
    return out;
}

namespace {

void gaussian_backward(const Gaussian6D& gs, const SliceFactors& factors, const GaussianView& view,
                       const Splat2D& splat, const SplatGradient& sg, const Camera& cam,
                       const CovarianceScale& scale, OpacityModulation modulation,
                       std::span<double, kParamsPerGaussian> out) {
    // Conic -> 2D covariance.
    Mat2 Q;
    Q << splat.conic[0], splat.conic[1], splat.conic[1], splat.conic[2];
    Mat2 gQ;
    gQ << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
    const Mat2 g_cov2d = -Q * gQ * Q;

    // 2D covariance -> camera-space covariance and Jacobian.
    const auto& J = view.jacobian;
    const Mat3 g_cov_cam = J.transpose() * g_cov2d * J;
    const Eigen::Matrix<double, 2, 3> gJ = 2.0 * g_cov2d * J * view.cov_cam;

    const double f = cam.focal();
    const Vec3& t = view.t;
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    Vec3 gt = Vec3::Zero();
    gt.x() += gJ(0, 2) * (-f * iz2) + sg.mean.x() * f * iz;
    gt.y() += gJ(1, 2) * (-f * iz2) + sg.mean.y() * f * iz;
    gt.z() += (gJ(0, 0) + gJ(1, 1)) * (-f * iz2) + gJ(0, 2) * (2.0 * f * t.x() * iz2 * iz) +
              gJ(1, 2) * (2.0 * f * t.y() * iz2 * iz) - sg.mean.x() * f * t.x() * iz2 -
              sg.mean.y() * f * t.y() * iz2;

    const Mat3& R = cam.rotation;
    const Mat3 g_sigma_s = R.transpose() * g_cov_cam * R;  // sliced covariance
    const Vec3 g_mu = R.transpose() * gt;                  // sliced mean

    // Opacity modulation and sigmoid.
    double g_w = 0.0;
    double g_opacity_raw = 0.0;
    if (!view.alpha_clamped) {
        g_w = sg.alpha * view.opacity;
        g_opacity_raw = sg.alpha * view.w * view.opacity * (1.0 - view.opacity);
    }

    // Conditioning.
    const Covariance6 cov = build_covariance(gs.cov_raw, scale);
    const Mat3 B = cov.pd();
    const Mat3& Dinv = factors.dd_inv;
    const Vec3& e = view.offset;
    const Vec3 Dinv_e = Dinv * e;

    Vec3 g_e = factors.gain.transpose() * g_mu - g_w * view.w * Dinv_e;
    Mat3 g_B = g_mu * Dinv_e.transpose() - 2.0 * g_sigma_s * B * Dinv;
    Mat3 g_Dinv = B.transpose() * g_mu * e.transpose() - B.transpose() * g_sigma_s * B -
                  0.5 * g_w * view.w * e * e.transpose();
    Mat3 g_D = -Dinv * g_Dinv * Dinv;
    if (modulation == OpacityModulation::RawDensity) g_D += -0.5 * g_w * view.w * Dinv;

    // View direction: shading and conditioning offset.
    Vec3 g_v = g_e;
    const Vec3& v = view.v;
    for (int c = 0; c < 3; ++c) {
        const double raw = view.color_raw[c];
        if (!(raw >= 0.0 && raw <= 1.0)) continue;
        const double gc = sg.color[c];
        out[kParamSh + c] += kShC0 * gc;
        out[kParamSh + 3 + c] += -kShC1 * v.y() * gc;
        out[kParamSh + 6 + c] += kShC1 * v.z() * gc;
        out[kParamSh + 9 + c] += -kShC1 * v.x() * gc;
        g_v.x() += -kShC1 * gs.sh[static_cast<std::size_t>(9 + c)] * gc;
        g_v.y() += -kShC1 * gs.sh[static_cast<std::size_t>(3 + c)] * gc;
        g_v.z() += kShC1 * gs.sh[static_cast<std::size_t>(6 + c)] * gc;
    }
    const Vec3 g_mu_p = g_mu + (g_v - v * v.dot(g_v)) / view.distance;

    for (int a = 0; a < 3; ++a) {
        out[kParamMuP + a] += g_mu_p[a];
        out[kParamMuD + a] += -g_e[a];
    }

    // Covariance -> Cholesky factor -> raw parameters.
    Mat6 G = Mat6::Zero();
    G.topLeftCorner<3, 3>() = g_sigma_s;
    G.topRightCorner<3, 3>() = g_B;
    G.bottomRightCorner<3, 3>() = g_D;
    const Mat6 gL = (G + G.transpose()) * cov.chol;
    for (int i = 0; i < 6; ++i) out[kParamCov + i] += gL(i, i) * cov.chol(i, i);
    for (int r = 1; r < 6; ++r) {
        for (int c = 0; c < r; ++c) {
            const double l = cov.chol(r, c);
            out[kParamCov + off_diagonal_index(r, c)] += gL(r, c) * (1.0 - l * l);
        }
    }
    out[kParamOpacity] += g_opacity_raw;
}

}  // namespace

GradientBuffer render_backward(const PreparedScene& prepared, const ForwardState& forward,
                               const Image& d_rgba) {
    const Scene& scene = *prepared.scene;
    if (forward.views.size() != scene.size()) {
        throw Error(ErrorCode::ShapeMismatch, "forward state does not belong to this scene");
    }
    const std::vector<SplatGradient> splat_grads = composite_backward(forward, d_rgba);
    GradientBuffer grads(scene.size());
    with_threads(forward.options.threads, [&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, forward.splats.size(), 64), [&](const auto& r) {
            for (std::size_t k = r.begin(); k != r.end(); ++k) {
                const Splat2D& s = forward.splats[k];
                const std::size_t i = s.gaussian_id;
                gaussian_backward(scene.gaussians[i], prepared.factors[i], forward.views[i], s,
                                  splat_grads[k], forward.camera, scene.meta.cov_scale,
                                  scene.meta.modulation, grads[i]);
            }
        });
    });
    return grads;
}

}  // namespace splat6d
