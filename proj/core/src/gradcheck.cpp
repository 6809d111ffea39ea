#include "morel/gradcheck.hpp"

namespace morel {

ParamSet GradCheckFixture::params() {
    ParamSet all;
    for (auto& in : inputs) {
        ParamSet sp = in.space->trainable_params(in.prefix, in.blend != BlendDirection::None);
        for (auto& arr : sp.arrays()) all.add(arr.name, arr.values, arr.group);
        if (in.field) {
            ParamSet fp = in.field->trainable_params(in.prefix + "deform.");
            for (auto& arr : fp.arrays()) all.add(arr.name, arr.values, arr.group);
        }
    }
    return all;
}

double GradCheckFixture::eval_loss() const {
    FrameForward fwd = forward_frame(inputs, view, blend_cfg, render_opts);
    const LossResult loss = photometric_loss(fwd.render.image, target, loss_cfg);
    double total = loss.loss;
    for (const auto& in : inputs)
        if (in.field) total += identity_regularizer(*in.space, *in.field, lambda_id, "", nullptr);
    return total;
}

GradBuffer GradCheckFixture::analytic_grads() {
    ParamSet ps = params();
    GradBuffer grads(ps);
    FrameForward fwd = forward_frame(inputs, view, blend_cfg, render_opts);
    const LossResult loss = photometric_loss(fwd.render.image, target, loss_cfg);
    backward_frame(fwd, loss.d_image, grads);
    for (const auto& in : inputs)
        if (in.field)
            identity_regularizer(*in.space, *in.field, lambda_id, in.prefix + "deform.", &grads);
    return grads;
}

namespace {

// A compact scene: a few anchors with a small decoder, target image offset
// from the render so the L1 term has no zero crossings at evaluation.
std::unique_ptr<AnchorSpace> make_space(Rng& rng, int anchors, int feature_dim, int slots,
                                        int hidden) {
    std::vector<Vec2> points;
    points.reserve(anchors);
    for (int i = 0; i < anchors; ++i) points.push_back({rng.uniform(1.0, 7.0), rng.uniform(1.0, 7.0)});
    auto space = std::make_unique<AnchorSpace>(
        init_anchor_space(points, 0.9, rng.next_u32(), feature_dim, slots, hidden));
    // Spread features and scalings so gradients are generic.
    for (auto& f : space->features) f = rng.normal(0.0, 0.4);
    for (auto& s : space->log_scalings) s += rng.normal(0.0, 0.2);
    // Separate depth keys: bias the decoder's depth output rows.
    for (int i = 0; i < space->slots; ++i)
        space->decoder.b2[static_cast<size_t>(i) * 8 + 7] = 0.8 * i + rng.uniform(0.0, 0.3);
    std::fill(space->levels.begin(), space->levels.end(), 0);
    return space;
}

Image make_target(Rng& rng, int w, int h) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set_pixel(x, y, {rng.uniform(0.25, 0.9), rng.uniform(0.25, 0.9),
                                 rng.uniform(0.25, 0.9)});
    return img;
}

ViewTransform make_view(int w, int h) {
    ViewTransform view;
    const double s = w / 8.0;
    view.linear = Mat2{s, 0.12 * s, -0.08 * s, s};
    view.translation = {0.4, 0.9};
    view.width = w;
    view.height = h;
    return view;
}

}  // namespace

GradCheckFixture make_fixture(FixtureKind kind, uint64_t seed) {
    Rng rng(seed, 5);
    GradCheckFixture fx;
    const int w = 24, h = 24;
    fx.view = make_view(w, h);
    fx.target = make_target(rng, w, h);
    fx.render_opts.cull = false;  // keep the loss smooth for finite differences

    const int feature_dim = 8, slots = 3, hidden = 10;
    fx.spaces.push_back(make_space(rng, 3, feature_dim, slots, hidden));

    SpaceInput a;
    a.space = fx.spaces[0].get();
    a.prefix = "a.";
    fx.inputs.push_back(a);

    if (kind != FixtureKind::Renderer) {
        fx.lambda_id = 1e-2;
        auto field = std::make_unique<DeformationField>(
            make_deformation_field(*fx.spaces[0], 8, 4, 10, rng.next_u32()));
        // Random decoder output layer so deformation deltas are nonzero.
        for (auto& v : field->w2) v = rng.normal(0.0, 0.15);
        for (auto& v : field->b2) v = rng.normal(0.0, 0.05);
        fx.fields.push_back(std::move(field));
        fx.inputs[0].field = fx.fields[0].get();
        fx.inputs[0].tau = 0.37;  // away from 0 and the blend offsets
    }

    if (kind == FixtureKind::RendererDeformBlend) {
        fx.inputs[0].blend = BlendDirection::Forward;
        fx.spaces.push_back(make_space(rng, 3, feature_dim, slots, hidden));
        auto field = std::make_unique<DeformationField>(
            make_deformation_field(*fx.spaces[1], 8, 4, 10, rng.next_u32()));
        for (auto& v : field->w2) v = rng.normal(0.0, 0.15);
        for (auto& v : field->b2) v = rng.normal(0.0, 0.05);
        fx.fields.push_back(std::move(field));

        SpaceInput b;
        b.space = fx.spaces[1].get();
        b.field = fx.fields[1].get();
        b.tau = -0.63;
        b.blend = BlendDirection::Backward;
        b.prefix = "b.";
        fx.inputs.push_back(b);

        // Generic blend parameters, offsets kept away from the taus above.
        for (auto& space : fx.spaces) {
            Rng brng(seed ^ 0x9191, 7);
            for (auto& v : space->blend_o_fw) v = brng.uniform(-0.2, 0.2);
            for (auto& v : space->blend_o_bw) v = brng.uniform(-0.2, 0.2);
            for (auto& v : space->blend_d_fw) v += brng.uniform(-0.3, 0.3);
            for (auto& v : space->blend_d_bw) v += brng.uniform(-0.3, 0.3);
        }
    }
    return fx;
}

GradCheckReport grad_check(GradCheckFixture& fixture, double h) {
    const GradBuffer analytic = fixture.analytic_grads();
    ParamSet ps = fixture.params();

    GradCheckReport report;
    for (auto& arr : ps.arrays()) {
        const auto& grad = analytic.at(arr.name);
        for (size_t i = 0; i < arr.values.size(); ++i) {
            const double saved = arr.values[i];
            arr.values[i] = saved + h;
            const double f_plus = fixture.eval_loss();
            arr.values[i] = saved - h;
            const double f_minus = fixture.eval_loss();
            arr.values[i] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double rel = std::abs(grad[i] - numeric) / (std::abs(numeric) + 1e-8);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = arr.name;
                report.worst_index = i;
                report.analytic = grad[i];
                report.numeric = numeric;
            }
        }
    }
    return report;
}

double gradient_linearity_violation(GradCheckFixture& fixture, uint64_t seed) {
    Rng rng(seed, 3);
    FrameForward fwd = forward_frame(fixture.inputs, fixture.view, fixture.blend_cfg,
                                     fixture.render_opts);

    Image g1(fixture.view.width, fixture.view.height);
    Image g2(fixture.view.width, fixture.view.height);
    for (size_t i = 0; i < g1.size(); ++i) {
        g1.data()[i] = rng.normal(0.0, 1.0);
        g2.data()[i] = rng.normal(0.0, 1.0);
    }
    const double a = 0.7, b = -1.3;
    Image mix(fixture.view.width, fixture.view.height);
    for (size_t i = 0; i < mix.size(); ++i) mix.data()[i] = a * g1.data()[i] + b * g2.data()[i];

    ParamSet ps = fixture.params();
    GradBuffer out1(ps), out2(ps), out_mix(ps);
    backward_frame(fwd, g1, out1);
    backward_frame(fwd, g2, out2);
    backward_frame(fwd, mix, out_mix);

    double worst = 0.0;
    for (const auto& name : out1.names()) {
        const auto& v1 = out1.at(name);
        const auto& v2 = out2.at(name);
        const auto& vm = out_mix.at(name);
        for (size_t i = 0; i < v1.size(); ++i)
            worst = std::max(worst, std::abs(vm[i] - (a * v1[i] + b * v2[i])));
    }
    return worst;
}

}  // namespace morel
