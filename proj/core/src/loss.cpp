#include "morel/loss.hpp"

#include "morel/ssim.hpp"

namespace morel {

LossResult photometric_loss(const Image& rendered, const Image& target, const LossConfig& cfg) {
    if (!rendered.same_shape(target)) throw InvalidInput("loss: image shape mismatch");

    LossResult res;
    res.d_image = Image(rendered.width(), rendered.height(), 0.0);

    const size_t n = rendered.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double* a = rendered.data();
    const double* b = target.data();
    double* d = res.d_image.data();

    double l1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        l1 += std::abs(diff);
        d[i] = (diff > 0.0 ? inv_n : (diff < 0.0 ? -inv_n : 0.0));
    }
    res.l1 = l1 * inv_n;

    res.ssim = 1.0;
    if (cfg.lambda_ssim != 0.0) {
        const auto lum_a = rendered.luminance();
        const auto lum_b = target.luminance();
        const auto fields = ssim_forward(lum_a, lum_b, rendered.width(), rendered.height());
        res.ssim = fields.mean;

        // d loss / d meanSSIM = -lambda; each channel contributes 1/3 to the
        // luminance.
        const auto d_lum = ssim_backward_x(fields, lum_a, lum_b, -cfg.lambda_ssim);
        for (size_t p = 0; p < d_lum.size(); ++p) {
            const double g = d_lum[p] / 3.0;
            d[p * 3] += g;
            d[p * 3 + 1] += g;
            d[p * 3 + 2] += g;
        }
    }

    res.loss = res.l1 + cfg.lambda_ssim * (1.0 - res.ssim);
    return res;
}

}  // namespace morel
