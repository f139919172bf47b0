#include "splat6d/loss.hpp"

#include <cmath>
#include <numeric>

#include "splat6d/error.hpp"

namespace splat6d {

void LossConfig::validate() const {
    if (!(lambda_l1 >= 0.0) || !(lambda_ssim >= 0.0) || lambda_l1 + lambda_ssim == 0.0) {
        throw Error(ErrorCode::InvalidParameter, "loss weights must be non-negative and not both zero");
    }
    if (ms_ssim_weights.empty()) throw Error(ErrorCode::InvalidParameter, "MS-SSIM needs at least one scale");
    const double sum = std::accumulate(ms_ssim_weights.begin(), ms_ssim_weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-3) throw Error(ErrorCode::InvalidParameter, "MS-SSIM weights must sum to 1");
}

LossValue loss(const Image& pred, const Image& gt, const LossConfig& cfg) {
    cfg.validate();
    if (pred.width != gt.width || pred.height != gt.height || pred.channels < 3 || gt.channels < 3) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth differ in shape");
    }
    LossValue out;
    out.grad = Image(pred.width, pred.height, pred.channels);
    const double n = 3.0 * static_cast<double>(pred.pixel_count());
    double l1 = 0.0;
    for (int y = 0; y < pred.height; ++y) {
        for (int x = 0; x < pred.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double d = pred.at(x, y, c) - gt.at(x, y, c);
                l1 += std::abs(d);
                const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                out.grad.at(x, y, c) = cfg.lambda_l1 * sign / n;
            }
        }
    }
    out.l1 = l1 / n;

    if (cfg.lambda_ssim > 0.0) {
        Image g;
        out.ssim_loss = 1.0 - ms_ssim(pred, gt, cfg.ms_ssim_weights, cfg.ssim, &g);
        for (std::size_t i = 0; i < out.grad.data.size(); ++i) out.grad.data[i] -= cfg.lambda_ssim * g.data[i];
    } else {
        out.ssim_loss = 1.0 - ms_ssim(pred, gt, cfg.ms_ssim_weights, cfg.ssim);
    }
    out.total = cfg.lambda_l1 * out.l1 + cfg.lambda_ssim * out.ssim_loss;
    return out;
}

}  // namespace splat6d
