#pragma once

#include <vector>

#include "splat6d/image.hpp"
#include "splat6d/ssim.hpp"

namespace splat6d {

struct LossConfig {
    double lambda_l1 = 0.8;
    double lambda_ssim = 0.2;
    std::vector<double> ms_ssim_weights{kMsSsimWeights.begin(), kMsSsimWeights.end()};
    SsimParams ssim;

    int ms_ssim_scales() const { return static_cast<int>(ms_ssim_weights.size()); }
    /// Throws InvalidParameter on negative or all-zero lambdas, no scales, or
    /// weights whose sum is off 1 by more than 1e-3.
    void validate() const;
};

struct LossValue {
    double total = 0.0;
    double l1 = 0.0;         // mean absolute RGB difference
    double ssim_loss = 0.0;  // 1 - MS-SSIM
    Image grad;              // d total / d pred, shape of pred; zero outside RGB
};

/// lambda_l1 * L1 + lambda_ssim * (1 - MS-SSIM) over the RGB channels.
LossValue loss(const Image& pred, const Image& gt, const LossConfig& cfg = {});

}  // namespace splat6d
