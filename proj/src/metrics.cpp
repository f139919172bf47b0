#include "splat6d/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "splat6d/error.hpp"
#include "splat6d/ssim.hpp"

namespace splat6d {

double psnr(const Image& a, const Image& b, double peak) {
    if (a.width != b.width || a.height != b.height || a.channels < 3 || b.channels < 3) {
        throw Error(ErrorCode::ShapeMismatch, "PSNR needs two RGB images of equal size");
    }
    double sum = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double d = a.at(x, y, c) - b.at(x, y, c);
                sum += d * d;
            }
    const double mse = sum / (3.0 * static_cast<double>(a.pixel_count()));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

bool MetricReport::psnr_infinite() const { return std::isinf(mean_psnr); }

MetricReport summarize(std::vector<ViewMetrics> views) {
    MetricReport r;
    r.views = std::move(views);
    for (const auto& v : r.views) {
        r.mean_psnr += v.psnr;
        r.mean_ssim += v.ssim;
    }
    if (!r.views.empty()) {
        r.mean_psnr /= static_cast<double>(r.views.size());
        r.mean_ssim /= static_cast<double>(r.views.size());
    }
    return r;
}

MetricReport evaluate(const Scene& scene, std::span<const TrainingView> views, const Vec3& background,
                      const RenderOptions& options, bool quantize_8bit) {
    if (views.empty()) throw Error(ErrorCode::InvalidParameter, "evaluation needs at least one view");
    const PreparedScene prepared = prepare_scene(scene, options.threads);
    std::vector<ViewMetrics> out;
    for (const auto& view : views) {
        Image rgb = render_rgb(prepared, view.camera, background, options);
        if (quantize_8bit) {
            for (auto& x : rgb.data) x = to_byte(x) / 255.0;
        }
        out.push_back({psnr(rgb, view.image), ssim(rgb, view.image)});
    }
    return summarize(std::move(out));
}

namespace {

std::string format_number(double x, int precision) {
    if (std::isinf(x)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, x);
    return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const MetricReport& report) {
    out << "view,psnr,ssim\n";
    for (std::size_t i = 0; i < report.views.size(); ++i) {
        out << i << ',' << format_number(report.views[i].psnr, 6) << ',' << format_number(report.views[i].ssim, 6) << '\n';
    }
    out << "mean," << format_number(report.mean_psnr, 6) << ',' << format_number(report.mean_ssim, 6) << '\n';
}

std::string format_metrics_table(const MetricReport& report) {
    std::ostringstream s;
    char line[96];
    std::snprintf(line, sizeof line, "%-6s %10s %8s\n", "view", "PSNR(dB)", "SSIM");
    s << line;
    auto row = [&](const std::string& name, const ViewMetrics& m) {
        std::snprintf(line, sizeof line, "%-6s %10s %8s\n", name.c_str(), format_number(m.psnr, 2).c_str(),
                      format_number(m.ssim, 4).c_str());
        s << line;
    };
    for (std::size_t i = 0; i < report.views.size(); ++i) row(std::to_string(i), report.views[i]);
    row("mean", {report.mean_psnr, report.mean_ssim});
    return s.str();
}

}  // namespace splat6d
