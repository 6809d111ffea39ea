#pragma once

#include <memory>

#include "morel/model_forward.hpp"

namespace morel {

// A small differentiable scene used to validate every hand-derived backward
// path against central finite differences. The loss is the real training
// loss (L1 + lambda_ssim * (1 - SSIM)) plus, when a field is present, the
// identity regularizer.
struct GradCheckFixture {
    std::vector<std::unique_ptr<AnchorSpace>> spaces;
    std::vector<std::unique_ptr<DeformationField>> fields;
    std::vector<SpaceInput> inputs;
    ViewTransform view;
    Image target;
    LossConfig loss_cfg;
    BlendConfig blend_cfg;
    RenderOptions render_opts;
    double lambda_id = 0.0;

    ParamSet params();
    double eval_loss() const;
    GradBuffer analytic_grads();
};

enum class FixtureKind { Renderer, RendererDeform, RendererDeformBlend };

GradCheckFixture make_fixture(FixtureKind kind, uint64_t seed);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// max over parameters of |analytic - central difference| / (|cd| + 1e-8).
GradCheckReport grad_check(GradCheckFixture& fixture, double h);

// Property probe: backward is linear in the upstream image gradient for a
// fixed tape. Returns the max absolute violation of
// backward(a*g1 + b*g2) == a*backward(g1) + b*backward(g2).
double gradient_linearity_violation(GradCheckFixture& fixture, uint64_t seed);

}  // namespace morel
