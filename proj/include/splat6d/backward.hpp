#pragma once

#include <span>
#include <vector>

#include "splat6d/rasterizer.hpp"

namespace splat6d {

/// Flat parameter layout of one Gaussian, shared by gradients and the optimizer.
inline constexpr int kParamMuP = 0;
inline constexpr int kParamMuD = 3;
inline constexpr int kParamCov = 6;
inline constexpr int kParamSh = 27;
inline constexpr int kParamOpacity = 39;

void pack_parameters(const Gaussian6D& g, std::span<double, kParamsPerGaussian> out);
void unpack_parameters(std::span<const double, kParamsPerGaussian> in, Gaussian6D& g);

/// Per-Gaussian gradients, kParamsPerGaussian doubles each, in scene order.
struct GradientBuffer {
    std::vector<double> data;

    GradientBuffer() = default;
    explicit GradientBuffer(std::size_t n) : data(n * kParamsPerGaussian, 0.0) {}

    std::size_t size() const { return data.size() / kParamsPerGaussian; }
    std::span<double, kParamsPerGaussian> operator[](std::size_t i) {
        return std::span<double, kParamsPerGaussian>(data.data() + i * kParamsPerGaussian, kParamsPerGaussian);
    }
    std::span<const double, kParamsPerGaussian> operator[](std::size_t i) const {
        return std::span<const double, kParamsPerGaussian>(data.data() + i * kParamsPerGaussian, kParamsPerGaussian);
    }
    bool all_finite() const;
};

/// Gradient of the loss with respect to the screen-space quantities of one splat.
struct SplatGradient {
    Vec2 mean = Vec2::Zero();
    Vec3 conic = Vec3::Zero();  // (Q00, Q01, Q11), Q01 counted once
    Vec3 color = Vec3::Zero();
    double alpha = 0.0;
};

/// Backward of compositing. `d_rgba` is dL/d(render), 4 channels. Returns one
/// entry per forward splat. Accumulation order is fixed, so the result does
/// not depend on the thread count.
std::vector<SplatGradient> composite_backward(const ForwardState& forward, const Image& d_rgba);

/// Chain from screen-space splat gradients back to the 40 parameters of every
/// scene Gaussian. Invisible or masked Gaussians get zero.
GradientBuffer render_backward(const PreparedScene& prepared, const ForwardState& forward,
                               const Image& d_rgba);

}  // namespace splat6d
