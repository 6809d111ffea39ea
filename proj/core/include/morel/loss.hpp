#pragma once

#include "morel/image.hpp"

namespace morel {

struct LossConfig {
    double lambda_ssim = 0.2;
};

struct LossResult {
    double loss = 0.0;
    double l1 = 0.0;
    double ssim = 0.0;
    Image d_image;  // dL/d rendered pixel values
};

// Photometric training loss: mean L1 plus lambda_ssim * (1 - SSIM), SSIM on
// the RGB-mean luminance. Returns the loss together with its exact gradient
// w.r.t. the rendered image.
LossResult photometric_loss(const Image& rendered, const Image& target, const LossConfig& cfg);

}  // namespace morel
