#pragma once

#include <string>
#include <vector>

#include "morel/blending.hpp"
#include "morel/deformation.hpp"
#include "morel/loss.hpp"
#include "morel/params.hpp"
#include "morel/renderer.hpp"
#include "morel/scene_model.hpp"

namespace morel {

enum class BlendDirection { None, Forward, Backward };

// One anchor space's participation in a frame: optionally deformed at tau and
// optionally opacity-weighted by its learnable temporal-opacity parameters.
struct SpaceInput {
    AnchorSpace* space = nullptr;
    DeformationField* field = nullptr;
    double tau = 0.0;
    BlendDirection blend = BlendDirection::None;
    // Constant opacity multiplier used when blend == None (linear-blend
    // baselines); learned weights take over otherwise.
    double fixed_weight = 1.0;
    std::string prefix;  // parameter name prefix, e.g. "a."
};

struct SpacePartTape {
    size_t gauss_begin = 0;  // offset of this space's Gaussians in the union
    std::vector<DeformQueryTape> deform_tapes;  // per anchor; empty without a field
    std::vector<DecodeTape> decode_tapes;       // per anchor
    std::vector<double> weight;                 // per anchor; 1 when not blending
    std::vector<double> decoded_opacity;        // per Gaussian, pre-blend
};

struct FrameForward {
    std::vector<SpaceInput> inputs;
    std::vector<SpacePartTape> parts;
    RenderTape render;
    BlendConfig blend_cfg;
};

// Deform, decode and weight every participating space, then composite the
// union in one sorted pass.
FrameForward forward_frame(const std::vector<SpaceInput>& inputs, const ViewTransform& view,
                           const BlendConfig& blend_cfg, const RenderOptions& opts);

// Full backward: routes dL/dImage into every participating parameter array
// (features, scalings, offsets, decoder, deformation, blend). `grads` must
// cover the union ParamSet of all inputs. Returns the raw per-Gaussian
// renderer gradients in union order (consumed by densification statistics).
std::vector<GaussianGrad> backward_frame(const FrameForward& fwd, const Image& d_image,
                                         GradBuffer& grads);

// IFB backward: gradients flow only into blend parameter arrays; every other
// array in `grads` is left untouched.
void backward_frame_blend_only(const FrameForward& fwd, const Image& d_image, GradBuffer& grads);

// lambda_id * mean_k ||field(position_k, tau=0)||^2. Anchors the deformation
// to the identity at its own keyframe during PWD. Adds gradients when grads
// is non-null; returns the penalty value.
double identity_regularizer(const AnchorSpace& space, const DeformationField& field,
                            double lambda_id, const std::string& prefix, GradBuffer* grads);

// Intermediate-frame rendering over chunk n: KfA_n deformed forward with its
// Fw blend parameters, KfA_{n+1} deformed backward with its Bw parameters,
// composited jointly. Throws OutOfWindow when t is outside [t_n, t_n + gop].
Image blend_frame(AnchorSpace& kfa_n, DeformationField& field_n, AnchorSpace& kfa_n1,
                  DeformationField& field_n1, int t, int gop, const ViewTransform& view,
                  const BlendConfig& blend_cfg, const RenderOptions& opts = {});

}  // namespace morel
