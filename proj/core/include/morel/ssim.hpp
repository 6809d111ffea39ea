#pragma once

#include <vector>

#include "morel/image.hpp"

namespace morel {

// Single-scale SSIM on a luminance field. 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] scale. Windows are renormalized at
// image borders so constant images produce the closed-form constant result
// everywhere.
struct SsimFields {
    int width = 0, height = 0;
    std::vector<double> mu_x, mu_y;    // blurred inputs
    std::vector<double> e_xx, e_yy, e_xy;  // blurred products
    std::vector<double> ssim_map;
    double mean = 0.0;
};

SsimFields ssim_forward(const std::vector<double>& x, const std::vector<double>& y, int width,
                        int height);

// d(mean SSIM)/dx scaled by `upstream`, holding y fixed.
std::vector<double> ssim_backward_x(const SsimFields& fields, const std::vector<double>& x,
                                    const std::vector<double>& y, double upstream);

// Border-renormalized separable Gaussian blur (the SSIM window) and its exact
// adjoint; exposed for tests.
std::vector<double> ssim_blur(const std::vector<double>& field, int width, int height);
std::vector<double> ssim_blur_adjoint(const std::vector<double>& field, int width, int height);

}  // namespace morel
