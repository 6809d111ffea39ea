#include "morel/scene_model.hpp"

#include <algorithm>
#include <map>

namespace morel {

void DecoderWeights::init_random(Rng& rng) {
    w1.resize(static_cast<size_t>(hidden) * in_dim());
    b1.assign(hidden, 0.0);
    w2.resize(static_cast<size_t>(out_dim()) * hidden);
    b2.assign(out_dim(), 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim()));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto& v : w1) v = rng.normal(0.0, s1);
    for (auto& v : w2) v = rng.normal(0.0, s2);
}

bool AnchorSpace::levels_assigned() const {
    for (int32_t l : levels)
        if (l < 0) return false;
    return !levels.empty();
}

void AnchorSpace::reset_stats() {
    std::fill(accum_grad.begin(), accum_grad.end(), 0.0);
    std::fill(accum_count.begin(), accum_count.end(), 0);
    std::fill(opacity_stat.begin(), opacity_stat.end(), 0.0);
}

void AnchorSpace::append_anchor(const Vec2& pos, const std::vector<double>& feature,
                                const Vec2& log_scaling, const std::vector<double>& anchor_offsets,
                                int32_t level) {
    if (feature.size() != static_cast<size_t>(feature_dim) ||
        anchor_offsets.size() != static_cast<size_t>(slots) * 2)
        throw InvalidInput("append_anchor: field size mismatch");
    positions.push_back(pos.x);
    positions.push_back(pos.y);
    features.insert(features.end(), feature.begin(), feature.end());
    log_scalings.push_back(log_scaling.x);
    log_scalings.push_back(log_scaling.y);
    offsets.insert(offsets.end(), anchor_offsets.begin(), anchor_offsets.end());
    levels.push_back(level);
    blend_o_fw.push_back(0.0);
    blend_d_fw.push_back(initial_blend_decay_raw());
    blend_o_bw.push_back(0.0);
    blend_d_bw.push_back(initial_blend_decay_raw());
    accum_grad.push_back(0.0);
    accum_count.push_back(0);
    opacity_stat.push_back(0.0);
}

void AnchorSpace::remove_anchors(const std::vector<char>& remove_mask) {
    if (remove_mask.size() != anchor_count()) throw InvalidInput("remove_anchors: mask size");
    auto filter = [&remove_mask](auto& vec, size_t stride) {
        using T = std::decay_t<decltype(vec[0])>;
        std::vector<T> kept;
        kept.reserve(vec.size());
        for (size_t k = 0; k < remove_mask.size(); ++k) {
            if (remove_mask[k]) continue;
            for (size_t j = 0; j < stride; ++j) kept.push_back(vec[k * stride + j]);
        }
        vec = std::move(kept);
    };
    filter(positions, 2);
    filter(features, feature_dim);
    filter(log_scalings, 2);
    filter(offsets, static_cast<size_t>(slots) * 2);
    filter(levels, 1);
    filter(blend_o_fw, 1);
    filter(blend_d_fw, 1);
    filter(blend_o_bw, 1);
    filter(blend_d_bw, 1);
    filter(accum_grad, 1);
    filter(accum_count, 1);
    filter(opacity_stat, 1);
}

ParamSet AnchorSpace::trainable_params(const std::string& prefix, bool include_blend) {
    ParamSet params;
    params.add(prefix + "features", {features.data(), features.size()}, "features");
    params.add(prefix + "log_scalings", {log_scalings.data(), log_scalings.size()}, "scalings");
    params.add(prefix + "offsets", {offsets.data(), offsets.size()}, "offsets");
    params.add(prefix + "decoder.w1", {decoder.w1.data(), decoder.w1.size()}, "decoder");
    params.add(prefix + "decoder.b1", {decoder.b1.data(), decoder.b1.size()}, "decoder");
    params.add(prefix + "decoder.w2", {decoder.w2.data(), decoder.w2.size()}, "decoder");
    params.add(prefix + "decoder.b2", {decoder.b2.data(), decoder.b2.size()}, "decoder");
    if (include_blend) {
        params.add(prefix + "blend_o_fw", {blend_o_fw.data(), blend_o_fw.size()}, "blend");
        params.add(prefix + "blend_d_fw", {blend_d_fw.data(), blend_d_fw.size()}, "blend");
        params.add(prefix + "blend_o_bw", {blend_o_bw.data(), blend_o_bw.size()}, "blend");
        params.add(prefix + "blend_d_bw", {blend_d_bw.data(), blend_d_bw.size()}, "blend");
    }
    return params;
}

AnchorDeformState canonical_state(const AnchorSpace& space, size_t k) {
    AnchorDeformState st;
    st.position = space.position(k);
    st.log_scaling = space.log_scaling(k);
    st.opacity_logit_delta.assign(space.slots, 0.0);
    return st;
}

double initial_blend_decay_raw() { return softplus_inverse(1.0); }

std::vector<GaussianAttributes> decode_anchor(const AnchorSpace& space, size_t k,
                                              const AnchorDeformState& state,
                                              const Vec2& view_code, DecodeTape* tape) {
    const DecoderWeights& dec = space.decoder;
    if (dec.feature_dim != space.feature_dim || dec.slots != space.slots)
        throw InvalidInput("decode_anchor: decoder shape mismatch");
    if (state.opacity_logit_delta.size() != static_cast<size_t>(space.slots))
        throw InvalidInput("decode_anchor: deform state slot mismatch");

    const int in_dim = dec.in_dim();
    const int out_dim = dec.out_dim();
    const int hid = dec.hidden;

    std::vector<double> input(in_dim);
    for (int f = 0; f < space.feature_dim; ++f)
        input[f] = space.features[k * space.feature_dim + f];
    input[space.feature_dim] = view_code.x;
    input[space.feature_dim + 1] = view_code.y;

    std::vector<double> hidden(hid);
    for (int hrow = 0; hrow < hid; ++hrow) {
        double acc = dec.b1[hrow];
        const double* wrow = dec.w1.data() + static_cast<size_t>(hrow) * in_dim;
        for (int c = 0; c < in_dim; ++c) acc += wrow[c] * input[c];
        hidden[hrow] = std::tanh(acc);
    }

    std::vector<double> raw(out_dim);
    for (int orow = 0; orow < out_dim; ++orow) {
        double acc = dec.b2[orow];
        const double* wrow = dec.w2.data() + static_cast<size_t>(orow) * hid;
        for (int c = 0; c < hid; ++c) acc += wrow[c] * hidden[c];
        raw[orow] = acc;
    }

    std::vector<GaussianAttributes> out(space.slots);
    DecodeTape scratch;
    DecodeTape& t = tape ? *tape : scratch;
    t.input = input;
    t.hidden = hidden;
    t.raw_out = raw;
    t.state = state;
    t.sx.resize(space.slots);
    t.sy.resize(space.slots);
    t.cos_t.resize(space.slots);
    t.sin_t.resize(space.slots);
    t.opacity.resize(space.slots);
    t.color.resize(space.slots);

    const double scale_x = std::exp(state.log_scaling.x);
    const double scale_y = std::exp(state.log_scaling.y);

    for (int i = 0; i < space.slots; ++i) {
        const double* r = raw.data() + static_cast<size_t>(i) * 8;
        GaussianAttributes& g = out[i];

        const double off_x = space.offsets[(k * space.slots + i) * 2];
        const double off_y = space.offsets[(k * space.slots + i) * 2 + 1];
        g.center = {state.position.x + scale_x * off_x, state.position.y + scale_y * off_y};

        g.color = {sigmoid(r[0]), sigmoid(r[1]), sigmoid(r[2])};
        g.opacity = sigmoid(r[3] + state.opacity_logit_delta[i]);

        const double theta = r[4];
        const double sx = std::exp(state.log_scaling.x + r[5]);
        const double sy = std::exp(state.log_scaling.y + r[6]);
        const double ct = std::cos(theta), st = std::sin(theta);
        const double v1 = sx * sx, v2 = sy * sy;
        g.cov = Sym2{ct * ct * v1 + st * st * v2, ct * st * (v1 - v2), st * st * v1 + ct * ct * v2};
        g.depth_key = r[7];

        t.sx[i] = sx;
        t.sy[i] = sy;
        t.cos_t[i] = ct;
        t.sin_t[i] = st;
        t.opacity[i] = g.opacity;
        t.color[i] = g.color;
    }
    return out;
}

DecodeGrads decode_anchor_backward(const AnchorSpace& space, size_t k, const DecodeTape& tape,
                                   const std::vector<GaussianGrad>& upstream,
                                   const std::vector<double>& d_opacity_decoded,
                                   std::vector<double>& d_w1, std::vector<double>& d_b1,
                                   std::vector<double>& d_w2, std::vector<double>& d_b2) {
    const DecoderWeights& dec = space.decoder;
    const int in_dim = dec.in_dim();
    const int hid = dec.hidden;
    const int out_dim = dec.out_dim();

    DecodeGrads g;
    g.d_feature.assign(space.feature_dim, 0.0);
    g.d_offsets.assign(static_cast<size_t>(space.slots) * 2, 0.0);
    g.d_opacity_delta.assign(space.slots, 0.0);

    std::vector<double> d_raw(out_dim, 0.0);

    const double scale_x = std::exp(tape.state.log_scaling.x);
    const double scale_y = std::exp(tape.state.log_scaling.y);

    for (int i = 0; i < space.slots; ++i) {
        const GaussianGrad& up = upstream[i];
        double* dr = d_raw.data() + static_cast<size_t>(i) * 8;

        // Colors and opacity through their sigmoids.
        dr[0] = up.d_color.r * sigmoid_grad(tape.color[i].r);
        dr[1] = up.d_color.g * sigmoid_grad(tape.color[i].g);
        dr[2] = up.d_color.b * sigmoid_grad(tape.color[i].b);
        const double d_logit = d_opacity_decoded[i] * sigmoid_grad(tape.opacity[i]);
        dr[3] = d_logit;
        g.d_opacity_delta[i] = d_logit;

        // Center: position + exp(ls) .* offset.
        const double off_x = space.offsets[(k * space.slots + i) * 2];
        const double off_y = space.offsets[(k * space.slots + i) * 2 + 1];
        g.d_state_position += up.d_center;
        g.d_state_log_scaling.x += up.d_center.x * scale_x * off_x;
        g.d_state_log_scaling.y += up.d_center.y * scale_y * off_y;
        g.d_offsets[static_cast<size_t>(i) * 2] = up.d_center.x * scale_x;
        g.d_offsets[static_cast<size_t>(i) * 2 + 1] = up.d_center.y * scale_y;

        // Covariance R diag(s^2) R^T; upstream d_cov uses the (xx, xy, yy)
        // parameter convention.
        const double ct = tape.cos_t[i], st = tape.sin_t[i];
        const double v1 = tape.sx[i] * tape.sx[i], v2 = tape.sy[i] * tape.sy[i];
        const double dxx = up.d_cov.xx, dxy = up.d_cov.xy, dyy = up.d_cov.yy;

        const double d_theta = dxx * (-2.0 * ct * st * (v1 - v2)) +
                               dxy * ((ct * ct - st * st) * (v1 - v2)) +
                               dyy * (2.0 * st * ct * (v1 - v2));
        const double d_v1 = dxx * ct * ct + dxy * ct * st + dyy * st * st;
        const double d_v2 = dxx * st * st - dxy * ct * st + dyy * ct * ct;
        // v = exp(2(ls + mult)) so dv/d(ls + mult) = 2v.
        const double d_arg1 = d_v1 * 2.0 * v1;
        const double d_arg2 = d_v2 * 2.0 * v2;

        dr[4] = d_theta;
        dr[5] = d_arg1;
        dr[6] = d_arg2;
        dr[7] = 0.0;  // depth key: the sort is piecewise constant
        g.d_state_log_scaling.x += d_arg1;
        g.d_state_log_scaling.y += d_arg2;
    }

    // MLP backward.
    std::vector<double> d_hidden(hid, 0.0);
    for (int orow = 0; orow < out_dim; ++orow) {
        const double dv = d_raw[orow];
        if (dv == 0.0) {
            continue;
        }
        double* wrow = d_w2.data() + static_cast<size_t>(orow) * hid;
        const double* w2row = dec.w2.data() + static_cast<size_t>(orow) * hid;
        for (int c = 0; c < hid; ++c) {
            wrow[c] += dv * tape.hidden[c];
            d_hidden[c] += dv * w2row[c];
        }
        d_b2[orow] += dv;
    }
    for (int hrow = 0; hrow < hid; ++hrow) {
        const double d_pre = d_hidden[hrow] * (1.0 - tape.hidden[hrow] * tape.hidden[hrow]);
        if (d_pre == 0.0) continue;
        double* wrow = d_w1.data() + static_cast<size_t>(hrow) * in_dim;
        const double* w1row = dec.w1.data() + static_cast<size_t>(hrow) * in_dim;
        for (int c = 0; c < in_dim; ++c) wrow[c] += d_pre * tape.input[c];
        for (int f = 0; f < space.feature_dim; ++f) g.d_feature[f] += d_pre * w1row[f];
        d_b1[hrow] += d_pre;
    }

    return g;
}

AnchorSpace init_anchor_space(const std::vector<Vec2>& points, double grid_voxel, uint64_t seed,
                              int feature_dim, int slots, int hidden) {
    if (points.empty()) throw InvalidInput("init_anchor_space: empty point list");
    if (!(grid_voxel > 0.0)) throw InvalidInput("init_anchor_space: grid_voxel must be > 0");

    // Group points by voxel cell; one anchor per occupied cell at the
    // centroid of its contributors. Cells are emitted in sorted order so the
    // result is independent of point ordering.
    std::map<std::pair<int64_t, int64_t>, std::pair<Vec2, int>> cells;
    for (const Vec2& p : points) {
        const auto cx = static_cast<int64_t>(std::floor(p.x / grid_voxel));
        const auto cy = static_cast<int64_t>(std::floor(p.y / grid_voxel));
        auto& entry = cells[{cy, cx}];
        entry.first += p;
        entry.second += 1;
    }

    AnchorSpace space;
    space.kind = SpaceKind::Global;
    space.feature_dim = feature_dim;
    space.slots = slots;
    space.grid_voxel = grid_voxel;

    Vec2 lo{points[0]}, hi{points[0]};
    for (const Vec2& p : points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const Vec2 margin{(hi.x - lo.x + grid_voxel) * 0.05, (hi.y - lo.y + grid_voxel) * 0.05};
    space.bbox_min = lo - margin;
    space.bbox_max = hi + margin;

    Rng rng(seed, 17);
    const double log_voxel = std::log(grid_voxel);
    std::vector<double> feature(feature_dim);
    std::vector<double> anchor_offsets(static_cast<size_t>(slots) * 2);
    for (const auto& [cell, acc] : cells) {
        const Vec2 centroid = acc.first * (1.0 / acc.second);
        for (auto& f : feature) f = rng.normal(0.0, 0.1);
        // Dimensionless jitter: decode scales offsets by exp(log_scaling),
        // which starts at grid_voxel, so spawned Gaussians reach up to half a
        // cell from their anchor.
        for (auto& o : anchor_offsets) o = rng.uniform(-0.5, 0.5);
        space.append_anchor(centroid, feature, {log_voxel, log_voxel}, anchor_offsets, -1);
    }

    space.decoder.feature_dim = feature_dim;
    space.decoder.slots = slots;
    space.decoder.hidden = hidden;
    space.decoder.init_random(rng);
    return space;
}

AnchorSpace derive_keyframe_space(const AnchorSpace& global, int n, int gop) {
    if (global.kind != SpaceKind::Global)
        throw PreconditionViolation("derive_keyframe_space: source is not a Global space");
    if (!global.levels_assigned())
        throw PreconditionViolation("derive_keyframe_space: levels not assigned");

    AnchorSpace key = global;  // deep copy of anchors and decoder
    key.kind = SpaceKind::Key;
    key.key_index = n;
    key.key_frame = n * gop;
    key.reset_stats();
    std::fill(key.blend_o_fw.begin(), key.blend_o_fw.end(), 0.0);
    std::fill(key.blend_o_bw.begin(), key.blend_o_bw.end(), 0.0);
    std::fill(key.blend_d_fw.begin(), key.blend_d_fw.end(), initial_blend_decay_raw());
    std::fill(key.blend_d_bw.begin(), key.blend_d_bw.end(), initial_blend_decay_raw());
    return key;
}

}  // namespace morel
