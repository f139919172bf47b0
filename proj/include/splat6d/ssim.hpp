#pragma once

#include <array>
#include <span>

#include "splat6d/image.hpp"

namespace splat6d {

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Single-scale SSIM over the RGB channels (mean over valid windows, then over
/// channels). Both sides need at least `window` pixels per axis. When
/// `grad_a` is given it receives dSSIM/da with the shape of `a` (zero beyond RGB).
double ssim(const Image& a, const Image& b, const SsimParams& params = {}, Image* grad_a = nullptr);

/// Multi-scale SSIM with one scale per weight and 2x2 average pooling between
/// scales. Negative per-scale terms are clamped to zero. Falls back to
/// single-scale SSIM when the smaller side is below 2^(scales - 1) * window.
double ms_ssim(const Image& a, const Image& b, std::span<const double> weights = kMsSsimWeights,
               const SsimParams& params = {}, Image* grad_a = nullptr);

/// Normalized 1D Gaussian taps.
std::vector<double> gaussian_window(int size, double sigma);

}  // namespace splat6d
