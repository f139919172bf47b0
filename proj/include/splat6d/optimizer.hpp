#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "splat6d/backward.hpp"
#include "splat6d/scene.hpp"

namespace splat6d {

/// base_lr * (1 - step / total)^0.9. Throws InvalidParameter when total <= 0
/// or step is outside [0, total].
double polylr(std::int64_t step, std::int64_t total, double base_lr);

/// Learning-rate multipliers per parameter group.
struct LrMultipliers {
    double mu_p = 0.1;
    double mu_d = 1.0;
    double cov = 1.0;
    double sh = 1.0;
    double opacity = 1.0;

    double for_param(int p) const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    LrMultipliers groups;
};

struct OptimizerState {
    std::vector<double> m;  // first moments, kParamsPerGaussian per Gaussian
    std::vector<double> v;  // second moments
    std::int64_t step = 0;
    double base_lr = 1e-3;
    std::int64_t total_steps = 300;
    std::int64_t skipped = 0;  // steps dropped for non-finite gradients

    OptimizerState() = default;
    OptimizerState(std::size_t gaussians, double base_lr_, std::int64_t total)
        : m(gaussians * kParamsPerGaussian, 0.0), v(gaussians * kParamsPerGaussian, 0.0),
          base_lr(base_lr_), total_steps(total) {}

    double current_lr() const { return polylr(step, total_steps, base_lr); }
};

/// One bias-corrected Adam update at lr = polylr(step). A gradient with any
/// non-finite entry leaves scene and moments untouched, bumps `skipped` and
/// returns false.
bool adam_step(OptimizerState& state, const GradientBuffer& grads, Scene& scene,
               const AdamConfig& config = {});

/// Binary sidecar: "G6DO", u32 version, i64 step, f64 base_lr, i64 total,
/// i64 skipped, u64 count, then m and v as f64.
void save_optimizer_state(const OptimizerState& state, const std::filesystem::path& path);
OptimizerState load_optimizer_state(const std::filesystem::path& path);

}  // namespace splat6d
