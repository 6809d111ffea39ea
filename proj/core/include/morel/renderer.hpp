#pragma once

#include <vector>

#include "morel/common.hpp"
#include "morel/image.hpp"
#include "morel/view.hpp"

namespace morel {

// A renderable Gaussian primitive. depth_key is a decoded pseudo-depth that
// only controls compositing order; 2D scenes have no geometric z.
struct GaussianAttributes {
    Vec2 center;        // scene units
    Sym2 cov;           // scene units^2, positive definite
    Vec3 color;         // [0,1]
    double opacity = 0.0;  // [0,1]
    double depth_key = 0.0;
};

struct RenderOptions {
    // Bounding-box half-extent in Mahalanobis sigmas. The kernel tail at the
    // box edge is exp(-cull_sigma^2/2); 4.5 keeps the culled render within
    // 1e-4 per channel of the cull-free one. cull=false rasterizes every
    // Gaussian over the full image (used by the finite-difference fixtures).
    double cull_sigma = 4.5;
    bool cull = true;
    int threads = 1;
};

// Per-Gaussian image-space precomputation, in input order.
struct ProjectedGaussian {
    Vec2 mu;      // image-space center
    Sym2 cov;     // image-space covariance
    Sym2 q;       // inverse image-space covariance
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bbox; empty if x1 < x0
};

// Everything the backward pass needs to replay compositing.
struct RenderTape {
    ViewTransform view;
    RenderOptions opts;
    std::vector<GaussianAttributes> gaussians;  // input order
    std::vector<ProjectedGaussian> projected;   // input order
    std::vector<int> order;                     // indices sorted ascending by depth_key
    Image image;
};

struct GaussianGrad {
    Vec2 d_center;   // dL/d center (scene space)
    Sym2 d_cov;      // dL/d cov, parameter convention (xx, xy, yy)
    Vec3 d_color;
    double d_opacity = 0.0;
    Vec2 d_screen;   // dL/d image-space center; consumed by densification stats
};

// Front-to-back alpha compositing over a black background. Gaussians are
// sorted ascending by depth_key (stable ties). Throws InvalidInput if any
// covariance is not positive definite.
Image render(const std::vector<GaussianAttributes>& gaussians, const ViewTransform& view,
             const RenderOptions& opts = {});

RenderTape render_forward(const std::vector<GaussianAttributes>& gaussians,
                          const ViewTransform& view, const RenderOptions& opts = {});

// Gradients of a scalar loss w.r.t. every input Gaussian's fields, given
// dL/dImage. Results are in input order. depth_key receives no gradient (the
// sort is piecewise constant).
std::vector<GaussianGrad> render_backward(const RenderTape& tape, const Image& loss_grad);

}  // namespace morel
