#pragma once

#include "morel/common.hpp"

namespace morel {

// Affine map from scene coordinates to image coordinates plus the target
// resolution. Pixel (x, y) samples the continuous image plane at
// (x + 0.5, y + 0.5).
struct ViewTransform {
    Mat2 linear = Mat2::identity();
    Vec2 translation{0.0, 0.0};
    int width = 128;
    int height = 128;

    Vec2 to_image(const Vec2& p) const { return linear * p + translation; }

    // View conditioning code fed to the attribute decoder: the view's
    // translation normalized by the image extent.
    Vec2 view_code() const {
        const double s = 1.0 / std::max(width, height);
        return {translation.x * s, translation.y * s};
    }

    void validate() const {
        if (std::abs(linear.det()) <= 1e-8)
            throw InvalidInput("view transform is singular (|det| <= 1e-8)");
        if (width <= 0 || height <= 0) throw InvalidInput("view resolution must be positive");
    }
};

}  // namespace morel
