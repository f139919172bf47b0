#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "splat6d/finetune.hpp"

namespace splat6d {

/// 10 log10(peak^2 / MSE) over RGB; +infinity when the images are identical.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct ViewMetrics {
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::vector<ViewMetrics> views;
    double mean_psnr = 0.0;  // infinite if any view is
    double mean_ssim = 0.0;

    bool psnr_infinite() const;
};

MetricReport summarize(std::vector<ViewMetrics> views);

/// Renders every view composited over `background` and compares with its image.
/// With `quantize_8bit` the render is rounded to 8 bits per channel first, as
/// when the references were read from PNG files.
MetricReport evaluate(const Scene& scene, std::span<const TrainingView> views,
                      const Vec3& background = Vec3::Zero(), const RenderOptions& options = {},
                      bool quantize_8bit = false);

/// CSV: view,psnr,ssim rows followed by a "mean" row. Infinite PSNR is written as "inf".
void write_metrics_csv(std::ostream& out, const MetricReport& report);
std::string format_metrics_table(const MetricReport& report);

}  // namespace splat6d
