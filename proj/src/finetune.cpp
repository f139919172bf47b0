#include "splat6d/finetune.hpp"

#include <iomanip>
#include <random>

#include "splat6d/error.hpp"

namespace splat6d {

Image render_rgb(const PreparedScene& prepared, const Camera& camera, const Vec3& background,
                 const RenderOptions& options) {
    return composite_over(render(prepared, camera, options), background);
}

LossValue view_loss_and_gradients(const PreparedScene& prepared, const TrainingView& view,
                                  const FinetuneConfig& config, GradientBuffer* grads) {
    RenderOptions options;
    options.threads = config.threads;
    options.raster = config.raster;
    ForwardState forward;
    const Image rgba = render(prepared, view.camera, options, grads ? &forward : nullptr);
    const Image rgb = composite_over(rgba, config.background);
    LossValue lv = loss(rgb, view.image, config.loss);
    if (grads) {
        Image d_rgba(rgba.width, rgba.height, 4);
        for (int y = 0; y < rgba.height; ++y) {
            for (int x = 0; x < rgba.width; ++x) {
                double d_alpha = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double g = lv.grad.at(x, y, c);
                    d_rgba.at(x, y, c) = g;
                    d_alpha -= config.background[c] * g;
                }
                d_rgba.at(x, y, 3) = d_alpha;
            }
        }
        *grads = render_backward(prepared, forward, d_rgba);
    }
    return lv;
}

FinetuneResult finetune(Scene& scene, std::span<const TrainingView> views,
                        const FinetuneConfig& config, const OptimizerState* resume) {
    if (views.empty()) throw Error(ErrorCode::InvalidParameter, "fine-tuning needs at least one view");
    if (config.iterations < 0) throw Error(ErrorCode::InvalidParameter, "iterations must be >= 0");
    config.loss.validate();

    FinetuneResult result;
    if (resume) {
        if (resume->m.size() != scene.size() * kParamsPerGaussian) {
            throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the scene");
        }
        result.optimizer = *resume;
        result.optimizer.total_steps = resume->step + config.iterations;
    } else {
        result.optimizer = OptimizerState(scene.size(), config.base_lr, config.iterations);
    }
    if (config.iterations == 0) return result;

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);
    GradientBuffer grads;
    for (int it = 0; it < config.iterations; ++it) {
        const TrainingView& view = views[pick(rng)];
        const PreparedScene prepared = prepare_scene(scene, config.threads);
        const LossValue lv = view_loss_and_gradients(prepared, view, config, &grads);
        result.trace.push_back({it, result.optimizer.current_lr(), lv.l1, lv.ssim_loss, lv.total});
        adam_step(result.optimizer, grads, scene, config.adam);
    }
    return result;
}

void write_loss_csv(std::ostream& out, std::span<const LossRecord> trace) {
    out << "iteration,lr,l1,ssim_loss,total\n" << std::setprecision(10);
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.lr << ',' << r.l1 << ',' << r.ssim_loss << ',' << r.total << '\n';
    }
}

}  // namespace splat6d
