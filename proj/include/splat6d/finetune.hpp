#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "splat6d/loss.hpp"
#include "splat6d/optimizer.hpp"
#include "splat6d/rasterizer.hpp"

namespace splat6d {

/// A camera and its ground-truth RGB image (already composited over the background).
struct TrainingView {
    Camera camera;
    Image image;
};

struct FinetuneConfig {
    int iterations = 300;
    double base_lr = 1e-3;
    std::uint64_t seed = 7;
    LossConfig loss;
    AdamConfig adam;
    Vec3 background = Vec3::Zero();
    int threads = 0;
    RasterConfig raster;
};

struct LossRecord {
    int iteration = 0;
    double lr = 0.0;
    double l1 = 0.0;
    double ssim_loss = 0.0;
    double total = 0.0;
};

struct FinetuneResult {
    std::vector<LossRecord> trace;  // loss of each iteration before its update
    OptimizerState optimizer;
};

/// Render `scene` for `camera` and composite over `background`.
Image render_rgb(const PreparedScene& prepared, const Camera& camera, const Vec3& background,
                 const RenderOptions& options = {});

/// Loss and parameter gradients for one view.
LossValue view_loss_and_gradients(const PreparedScene& prepared, const TrainingView& view,
                                  const FinetuneConfig& config, GradientBuffer* grads);

/// `iterations` rounds of: pick a view (uniform, seeded), render, loss,
/// backward, Adam. The Gaussian set is fixed. `resume` continues a previous
/// optimizer state instead of starting from zero moments.
FinetuneResult finetune(Scene& scene, std::span<const TrainingView> views,
                        const FinetuneConfig& config = {}, const OptimizerState* resume = nullptr);

/// CSV with header iteration,lr,l1,ssim_loss,total.
void write_loss_csv(std::ostream& out, std::span<const LossRecord> trace);

}  // namespace splat6d
