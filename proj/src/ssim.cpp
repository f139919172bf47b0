#include "splat6d/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "splat6d/error.hpp"

namespace splat6d {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const double c = 0.5 * (size - 1);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        taps[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

namespace {

struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
    double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel_plane(const Image& img, int c) {
    Plane p(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
    return p;
}

// Valid-mode separable correlation.
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    Plane rows(in.w - n + 1, in.h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < rows.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * in.at(x + i, y);
            rows.at(x, y) = s;
        }
    Plane out(rows.w, in.h - n + 1);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * rows.at(x, y + i);
            out.at(x, y) = s;
        }
    return out;
}

// Adjoint of filter_valid: scatters a valid-size map back to the input size.
Plane filter_valid_adjoint(const Plane& g, const std::vector<double>& k, int w, int h) {
    const int n = static_cast<int>(k.size());
    Plane cols(g.w, h);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
            for (int i = 0; i < n; ++i) cols.at(x, y + i) += k[static_cast<std::size_t>(i)] * g.at(x, y);
    Plane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < g.w; ++x)
            for (int i = 0; i < n; ++i) out.at(x + i, y) += k[static_cast<std::size_t>(i)] * cols.at(x, y);
    return out;
}

Plane multiply(const Plane& a, const Plane& b) {
    Plane out(a.w, a.h);
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

Plane avg_pool2(const Plane& in) {
    Plane out(in.w / 2, in.h / 2);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.at(x, y) = 0.25 * (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) +
                                   in.at(2 * x, 2 * y + 1) + in.at(2 * x + 1, 2 * y + 1));
    return out;
}

Plane avg_pool2_adjoint(const Plane& g, int w, int h) {
    Plane out(w, h);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            const double q = 0.25 * g.at(x, y);
            out.at(2 * x, 2 * y) += q;
            out.at(2 * x + 1, 2 * y) += q;
            out.at(2 * x, 2 * y + 1) += q;
            out.at(2 * x + 1, 2 * y + 1) += q;
        }
    return out;
}

// Mean over valid windows of either l*cs (full) or cs alone, with the
// gradient with respect to `a` when requested.
double ssim_term(const Plane& a, const Plane& b, const std::vector<double>& k,
                 const SsimParams& p, bool full, Plane* grad) {
    const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
    const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
    const Plane mu_a = filter_valid(a, k);
    const Plane mu_b = filter_valid(b, k);
    const Plane e_aa = filter_valid(multiply(a, a), k);
    const Plane e_bb = filter_valid(multiply(b, b), k);
    const Plane e_ab = filter_valid(multiply(a, b), k);
    const std::size_t n = mu_a.v.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    Plane d_mu, d_saa, d_sab;
    if (grad) {
        d_mu = Plane(mu_a.w, mu_a.h);
        d_saa = Plane(mu_a.w, mu_a.h);
        d_sab = Plane(mu_a.w, mu_a.h);
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const double ma = mu_a.v[q], mb = mu_b.v[q];
        const double saa = e_aa.v[q] - ma * ma;
        const double sbb = e_bb.v[q] - mb * mb;
        const double sab = e_ab.v[q] - ma * mb;
        const double n1 = 2.0 * ma * mb + c1, d1 = ma * ma + mb * mb + c1;
        const double n2 = 2.0 * sab + c2, d2 = saa + sbb + c2;
        const double l = full ? n1 / d1 : 1.0;
        const double cs = n2 / d2;
        sum += l * cs;
        if (grad) {
            const double dl_dma = full ? (2.0 * mb * d1 - n1 * 2.0 * ma) / (d1 * d1) : 0.0;
            const double df_dma = cs * dl_dma * inv_n;
            const double df_dsaa = -l * n2 / (d2 * d2) * inv_n;
            const double df_dsab = l * 2.0 / d2 * inv_n;
            // saa = E[a^2] - ma^2 and sab = E[ab] - ma mb feed back into the mean.
            d_mu.v[q] = df_dma - 2.0 * ma * df_dsaa - mb * df_dsab;
            d_saa.v[q] = df_dsaa;
            d_sab.v[q] = df_dsab;
        }
    }
    if (grad) {
        const Plane g_mu = filter_valid_adjoint(d_mu, k, a.w, a.h);
        const Plane g_aa = filter_valid_adjoint(d_saa, k, a.w, a.h);
        const Plane g_ab = filter_valid_adjoint(d_sab, k, a.w, a.h);
        *grad = Plane(a.w, a.h);
        for (std::size_t i = 0; i < grad->v.size(); ++i) {
            grad->v[i] = g_mu.v[i] + 2.0 * a.v[i] * g_aa.v[i] + b.v[i] * g_ab.v[i];
        }
    }
    return sum / static_cast<double>(n);
}

double ms_ssim_plane(const Plane& a, const Plane& b, std::span<const double> weights,
                     const std::vector<double>& k, const SsimParams& p, Plane* grad) {
    const std::size_t scales = weights.size();
    std::vector<Plane> pa{a}, pb{b};
    for (std::size_t s = 1; s < scales; ++s) {
        pa.push_back(avg_pool2(pa.back()));
        pb.push_back(avg_pool2(pb.back()));
    }
    std::vector<double> raw(scales), term(scales);
    std::vector<Plane> grads(scales);
    for (std::size_t s = 0; s < scales; ++s) {
        raw[s] = ssim_term(pa[s], pb[s], k, p, s + 1 == scales, grad ? &grads[s] : nullptr);
        term[s] = std::max(raw[s], 0.0);
    }
    double value = 1.0;
    for (std::size_t s = 0; s < scales; ++s) value *= std::pow(term[s], weights[s]);
    if (!grad) return value;

    Plane acc(pa.back().w, pa.back().h);
    for (std::size_t s = scales; s-- > 0;) {
        if (s + 1 < scales) acc = avg_pool2_adjoint(acc, pa[s].w, pa[s].h);
        if (raw[s] > 0.0 && value > 0.0) {
            const double d = value * weights[s] / raw[s];
            for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += d * grads[s].v[i];
        }
    }
    *grad = std::move(acc);
    return value;
}

void check_pair(const Image& a, const Image& b, int min_side) {
    if (a.width != b.width || a.height != b.height || a.channels < 3 || b.channels < 3) {
        throw Error(ErrorCode::ShapeMismatch, "SSIM needs two RGB images of equal size");
    }
    if (std::min(a.width, a.height) < min_side) {
        throw Error(ErrorCode::InvalidParameter,
                    "image smaller than the SSIM window (" + std::to_string(min_side) + " px)");
    }
}

template <typename PlaneFn>
double over_channels(const Image& a, const Image& b, Image* grad_a, PlaneFn fn) {
    if (grad_a) *grad_a = Image(a.width, a.height, a.channels);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        Plane g;
        total += fn(channel_plane(a, c), channel_plane(b, c), grad_a ? &g : nullptr);
        if (grad_a) {
            for (int y = 0; y < a.height; ++y)
                for (int x = 0; x < a.width; ++x) grad_a->at(x, y, c) = g.at(x, y) / 3.0;
        }
    }
    return total / 3.0;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params, Image* grad_a) {
    check_pair(a, b, params.window);
    const auto k = gaussian_window(params.window, params.sigma);
    return over_channels(a, b, grad_a, [&](const Plane& pa, const Plane& pb, Plane* g) {
        return ssim_term(pa, pb, k, params, true, g);
    });
}

double ms_ssim(const Image& a, const Image& b, std::span<const double> weights,
               const SsimParams& params, Image* grad_a) {
    if (weights.empty()) throw Error(ErrorCode::InvalidParameter, "MS-SSIM needs at least one scale");
    const int needed = (1 << (weights.size() - 1)) * params.window;
    if (std::min(a.width, a.height) < needed) return ssim(a, b, params, grad_a);
    check_pair(a, b, params.window);
    const auto k = gaussian_window(params.window, params.sigma);
    return over_channels(a, b, grad_a, [&](const Plane& pa, const Plane& pb, Plane* g) {
        return ms_ssim_plane(pa, pb, weights, k, params, g);
    });
}

}  // namespace splat6d
