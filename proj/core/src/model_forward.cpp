#include "morel/model_forward.hpp"

namespace morel {

namespace {

void blend_params_for(const AnchorSpace& space, BlendDirection dir, size_t k, double& offset,
                      double& decay_raw) {
    if (dir == BlendDirection::Forward) {
        offset = space.blend_o_fw[k];
        decay_raw = space.blend_d_fw[k];
    } else {
        offset = space.blend_o_bw[k];
        decay_raw = space.blend_d_bw[k];
    }
}

}  // namespace

FrameForward forward_frame(const std::vector<SpaceInput>& inputs, const ViewTransform& view,
                           const BlendConfig& blend_cfg, const RenderOptions& opts) {
    FrameForward fwd;
    fwd.inputs = inputs;
    fwd.blend_cfg = blend_cfg;
    fwd.parts.resize(inputs.size());

    std::vector<GaussianAttributes> union_list;
    const Vec2 view_code = view.view_code();

    for (size_t s = 0; s < inputs.size(); ++s) {
        const SpaceInput& in = inputs[s];
        SpacePartTape& part = fwd.parts[s];
        const size_t count = in.space->anchor_count();
        part.gauss_begin = union_list.size();
        part.decode_tapes.resize(count);
        part.weight.assign(count, in.fixed_weight);
        if (in.field) part.deform_tapes.resize(count);
        part.decoded_opacity.reserve(count * in.space->slots);

        for (size_t k = 0; k < count; ++k) {
            AnchorDeformState state;
            if (in.field) {
                const DeformationDelta delta =
                    query(*in.field, in.space->position(k), in.tau, &part.deform_tapes[k]);
                state = apply_deformation(*in.space, k, delta);
            } else {
                state = canonical_state(*in.space, k);
            }

            auto gaussians = decode_anchor(*in.space, k, state, view_code, &part.decode_tapes[k]);

            if (in.blend != BlendDirection::None) {
                double offset = 0.0, decay_raw = 0.0;
                blend_params_for(*in.space, in.blend, k, offset, decay_raw);
                part.weight[k] =
                    blend_weight(offset, softplus(decay_raw), in.tau, blend_cfg.lambda_decay);
            }

            for (auto& g : gaussians) {
                part.decoded_opacity.push_back(g.opacity);
                g.opacity *= part.weight[k];
                union_list.push_back(g);
            }
        }
    }

    fwd.render = render_forward(union_list, view, opts);
    return fwd;
}

std::vector<GaussianGrad> backward_frame(const FrameForward& fwd, const Image& d_image,
                                         GradBuffer& grads) {
    const std::vector<GaussianGrad> render_grads = render_backward(fwd.render, d_image);

    for (size_t s = 0; s < fwd.inputs.size(); ++s) {
        const SpaceInput& in = fwd.inputs[s];
        const SpacePartTape& part = fwd.parts[s];
        AnchorSpace& space = *in.space;
        const int slots = space.slots;

        auto& d_features = grads.at(in.prefix + "features");
        auto& d_log_scalings = grads.at(in.prefix + "log_scalings");
        auto& d_offsets = grads.at(in.prefix + "offsets");
        auto& d_w1 = grads.at(in.prefix + "decoder.w1");
        auto& d_b1 = grads.at(in.prefix + "decoder.b1");
        auto& d_w2 = grads.at(in.prefix + "decoder.w2");
        auto& d_b2 = grads.at(in.prefix + "decoder.b2");

        std::vector<GaussianGrad> upstream(slots);
        std::vector<double> d_opacity_decoded(slots);

        for (size_t k = 0; k < space.anchor_count(); ++k) {
            const size_t base = part.gauss_begin + k * slots;
            double d_weight = 0.0;
            for (int i = 0; i < slots; ++i) {
                upstream[i] = render_grads[base + i];
                // effective = decoded * weight
                d_weight += upstream[i].d_opacity * part.decoded_opacity[k * slots + i];
                d_opacity_decoded[i] = upstream[i].d_opacity * part.weight[k];
            }

            if (in.blend != BlendDirection::None && d_weight != 0.0) {
                double offset = 0.0, decay_raw = 0.0;
                blend_params_for(space, in.blend, k, offset, decay_raw);
                const auto bw = blend_weight_backward(offset, softplus(decay_raw), in.tau,
                                                      fwd.blend_cfg.lambda_decay, part.weight[k],
                                                      d_weight);
                const bool forward = in.blend == BlendDirection::Forward;
                auto& d_o = grads.at(in.prefix + (forward ? "blend_o_fw" : "blend_o_bw"));
                auto& d_d = grads.at(in.prefix + (forward ? "blend_d_fw" : "blend_d_bw"));
                d_o[k] += bw.d_offset;
                d_d[k] += bw.d_decay * softplus_grad(decay_raw);
            }

            const DecodeGrads dg = decode_anchor_backward(space, k, part.decode_tapes[k], upstream,
                                                          d_opacity_decoded, d_w1, d_b1, d_w2,
                                                          d_b2);

            for (int f = 0; f < space.feature_dim; ++f)
                d_features[k * space.feature_dim + f] += dg.d_feature[f];
            d_log_scalings[2 * k] += dg.d_state_log_scaling.x;
            d_log_scalings[2 * k + 1] += dg.d_state_log_scaling.y;
            for (int i = 0; i < slots * 2; ++i)
                d_offsets[k * slots * 2 + i] += dg.d_offsets[i];

            if (in.field) {
                DeformationDelta up;
                up.d_position = dg.d_state_position;
                up.d_log_scaling = dg.d_state_log_scaling;
                up.d_opacity_logit = dg.d_opacity_delta;
                query_backward(*in.field, part.deform_tapes[k], up, in.prefix + "deform.", grads);
            }
        }
    }
    return render_grads;
}

void backward_frame_blend_only(const FrameForward& fwd, const Image& d_image, GradBuffer& grads) {
    const std::vector<GaussianGrad> render_grads = render_backward(fwd.render, d_image);

    for (size_t s = 0; s < fwd.inputs.size(); ++s) {
        const SpaceInput& in = fwd.inputs[s];
        if (in.blend == BlendDirection::None) continue;
        const SpacePartTape& part = fwd.parts[s];
        const AnchorSpace& space = *in.space;
        const int slots = space.slots;

        const bool forward = in.blend == BlendDirection::Forward;
        auto& d_o = grads.at(in.prefix + (forward ? "blend_o_fw" : "blend_o_bw"));
        auto& d_d = grads.at(in.prefix + (forward ? "blend_d_fw" : "blend_d_bw"));

        for (size_t k = 0; k < space.anchor_count(); ++k) {
            const size_t base = part.gauss_begin + k * slots;
            double d_weight = 0.0;
            for (int i = 0; i < slots; ++i)
                d_weight += render_grads[base + i].d_opacity * part.decoded_opacity[k * slots + i];
            if (d_weight == 0.0) continue;

            double offset = 0.0, decay_raw = 0.0;
            blend_params_for(space, in.blend, k, offset, decay_raw);
            const auto bw = blend_weight_backward(offset, softplus(decay_raw), in.tau,
                                                  fwd.blend_cfg.lambda_decay, part.weight[k],
                                                  d_weight);
            d_o[k] += bw.d_offset;
            d_d[k] += bw.d_decay * softplus_grad(decay_raw);
        }
    }
}

double identity_regularizer(const AnchorSpace& space, const DeformationField& field,
                            double lambda_id, const std::string& prefix, GradBuffer* grads) {
    if (lambda_id == 0.0) return 0.0;
    const size_t count = space.anchor_count();
    if (count == 0) return 0.0;
    const double scale = lambda_id / static_cast<double>(count);

    double penalty = 0.0;
    DeformQueryTape tape;
    for (size_t k = 0; k < count; ++k) {
        const DeformationDelta delta = query(field, space.position(k), 0.0, &tape);
        double sq = delta.d_position.dot(delta.d_position) +
                    delta.d_log_scaling.dot(delta.d_log_scaling);
        for (double v : delta.d_opacity_logit) sq += v * v;
        penalty += scale * sq;

        if (grads) {
            DeformationDelta up;
            up.d_position = delta.d_position * (2.0 * scale);
            up.d_log_scaling = delta.d_log_scaling * (2.0 * scale);
            up.d_opacity_logit.resize(delta.d_opacity_logit.size());
            for (size_t i = 0; i < delta.d_opacity_logit.size(); ++i)
                up.d_opacity_logit[i] = 2.0 * scale * delta.d_opacity_logit[i];
            query_backward(field, tape, up, prefix, *grads);
        }
    }
    return penalty;
}

Image blend_frame(AnchorSpace& kfa_n, DeformationField& field_n, AnchorSpace& kfa_n1,
                  DeformationField& field_n1, int t, int gop, const ViewTransform& view,
                  const BlendConfig& blend_cfg, const RenderOptions& opts) {
    const int t_n = kfa_n.key_frame;
    if (t < t_n || t > t_n + gop)
        throw OutOfWindow("frame " + std::to_string(t) + " outside chunk [" + std::to_string(t_n) +
                          ", " + std::to_string(t_n + gop) + "]");
    const double tau_n = static_cast<double>(t - t_n) / gop;
    const double tau_n1 = static_cast<double>(t - kfa_n1.key_frame) / gop;

    std::vector<SpaceInput> inputs{
        {&kfa_n, &field_n, tau_n, BlendDirection::Forward, 1.0, "a."},
        {&kfa_n1, &field_n1, tau_n1, BlendDirection::Backward, 1.0, "b."},
    };
    return forward_frame(inputs, view, blend_cfg, opts).render.image;
}

}  // namespace morel
