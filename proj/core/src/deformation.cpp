#include "morel/deformation.hpp"

#include <algorithm>

namespace morel {

RelativeTime normalize_time(int t, int t_n, int gop, int total_frames) {
    const int lo = std::max(0, t_n - gop);
    const int hi = std::min(t_n + gop, total_frames - 1);
    if (t < lo || t > hi)
        throw OutOfWindow("frame " + std::to_string(t) + " outside BDW [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
    return {static_cast<double>(t - t_n) / static_cast<double>(gop)};
}

ParamSet DeformationField::trainable_params(const std::string& prefix) {
    ParamSet params;
    params.add(prefix + "grid_xy", {grid_xy.data(), grid_xy.size()}, "deform_grids");
    params.add(prefix + "grid_xt", {grid_xt.data(), grid_xt.size()}, "deform_grids");
    params.add(prefix + "grid_yt", {grid_yt.data(), grid_yt.size()}, "deform_grids");
    params.add(prefix + "w1", {w1.data(), w1.size()}, "deform_decoder");
    params.add(prefix + "b1", {b1.data(), b1.size()}, "deform_decoder");
    params.add(prefix + "w2", {w2.data(), w2.size()}, "deform_decoder");
    params.add(prefix + "b2", {b2.data(), b2.size()}, "deform_decoder");
    return params;
}

DeformationField make_deformation_field(const AnchorSpace& owner, int grid_res, int channels,
                                        int hidden, uint64_t seed) {
    DeformationField f;
    f.grid_res = grid_res;
    f.channels = channels;
    f.hidden = hidden;
    f.slots = owner.slots;
    f.owner_index = owner.key_index;
    f.bbox_min = owner.bbox_min;
    f.bbox_max = owner.bbox_max;

    const size_t grid_size = static_cast<size_t>(channels) * grid_res * grid_res;
    f.grid_xy.resize(grid_size);
    f.grid_xt.resize(grid_size);
    f.grid_yt.resize(grid_size);

    // Grids start near 1 so the multiplicative fusion carries signal; the
    // zero output layer keeps the field an exact identity regardless.
    Rng rng(seed, 23);
    for (auto* g : {&f.grid_xy, &f.grid_xt, &f.grid_yt})
        for (auto& v : *g) v = rng.normal(1.0, 0.1);

    f.w1.resize(static_cast<size_t>(hidden) * channels);
    f.b1.assign(hidden, 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(channels));
    for (auto& v : f.w1) v = rng.normal(0.0, s1);
    f.w2.assign(static_cast<size_t>(f.out_dim()) * hidden, 0.0);
    f.b2.assign(f.out_dim(), 0.0);
    return f;
}

void sample_plane(const std::vector<double>& grid, int res, int channels, double u, double v,
                  double* out) {
    const double cu = std::clamp(u, 0.0, static_cast<double>(res - 1));
    const double cv = std::clamp(v, 0.0, static_cast<double>(res - 1));
    const int u0 = std::min(static_cast<int>(cu), res - 2);
    const int v0 = std::min(static_cast<int>(cv), res - 2);
    const double fu = cu - u0;
    const double fv = cv - v0;

    const size_t plane = static_cast<size_t>(res) * res;
    for (int c = 0; c < channels; ++c) {
        const double* g = grid.data() + c * plane;
        const double g00 = g[static_cast<size_t>(v0) * res + u0];
        const double g01 = g[static_cast<size_t>(v0) * res + u0 + 1];
        const double g10 = g[static_cast<size_t>(v0 + 1) * res + u0];
        const double g11 = g[static_cast<size_t>(v0 + 1) * res + u0 + 1];
        out[c] = (1.0 - fv) * ((1.0 - fu) * g00 + fu * g01) + fv * ((1.0 - fu) * g10 + fu * g11);
    }
}

namespace {

struct GridCoords {
    double ux, uy, ut;  // continuous grid coords for x, y, tau
};

GridCoords grid_coords(const DeformationField& f, const Vec2& position, double tau) {
    const double sx = (f.bbox_max.x - f.bbox_min.x);
    const double sy = (f.bbox_max.y - f.bbox_min.y);
    GridCoords c;
    c.ux = (position.x - f.bbox_min.x) / sx * (f.grid_res - 1);
    c.uy = (position.y - f.bbox_min.y) / sy * (f.grid_res - 1);
    c.ut = (tau + 1.0) * 0.5 * (f.grid_res - 1);
    return c;
}

// Scatter the bilinear adjoint of one plane sample into a gradient array.
void scatter_plane(std::vector<double>& grad, int res, int channels, double u, double v,
                   const double* d_sample) {
    const double cu = std::clamp(u, 0.0, static_cast<double>(res - 1));
    const double cv = std::clamp(v, 0.0, static_cast<double>(res - 1));
    const int u0 = std::min(static_cast<int>(cu), res - 2);
    const int v0 = std::min(static_cast<int>(cv), res - 2);
    const double fu = cu - u0;
    const double fv = cv - v0;

    const size_t plane = static_cast<size_t>(res) * res;
    for (int c = 0; c < channels; ++c) {
        double* g = grad.data() + c * plane;
        const double d = d_sample[c];
        g[static_cast<size_t>(v0) * res + u0] += d * (1.0 - fv) * (1.0 - fu);
        g[static_cast<size_t>(v0) * res + u0 + 1] += d * (1.0 - fv) * fu;
        g[static_cast<size_t>(v0 + 1) * res + u0] += d * fv * (1.0 - fu);
        g[static_cast<size_t>(v0 + 1) * res + u0 + 1] += d * fv * fu;
    }
}

}  // namespace

PlaneSamples sample_planes(const DeformationField& field, const Vec2& position, double tau) {
    if (std::abs(tau) > 1.0 + 1e-12) throw InvalidInput("deformation query with |tau| > 1");
    const GridCoords c = grid_coords(field, position, tau);
    PlaneSamples s;
    s.xy.resize(field.channels);
    s.xt.resize(field.channels);
    s.yt.resize(field.channels);
    sample_plane(field.grid_xy, field.grid_res, field.channels, c.ux, c.uy, s.xy.data());
    sample_plane(field.grid_xt, field.grid_res, field.channels, c.ux, c.ut, s.xt.data());
    sample_plane(field.grid_yt, field.grid_res, field.channels, c.uy, c.ut, s.yt.data());
    return s;
}

DeformationDelta query(const DeformationField& field, const Vec2& position, double tau,
                       DeformQueryTape* tape) {
    PlaneSamples planes = sample_planes(field, position, tau);

    std::vector<double> fused(field.channels);
    for (int c = 0; c < field.channels; ++c) fused[c] = planes.xy[c] * planes.xt[c] * planes.yt[c];

    std::vector<double> hidden(field.hidden);
    for (int hrow = 0; hrow < field.hidden; ++hrow) {
        double acc = field.b1[hrow];
        const double* wrow = field.w1.data() + static_cast<size_t>(hrow) * field.channels;
        for (int c = 0; c < field.channels; ++c) acc += wrow[c] * fused[c];
        hidden[hrow] = std::tanh(acc);
    }

    const int out_dim = field.out_dim();
    std::vector<double> raw(out_dim);
    for (int orow = 0; orow < out_dim; ++orow) {
        double acc = field.b2[orow];
        const double* wrow = field.w2.data() + static_cast<size_t>(orow) * field.hidden;
        for (int c = 0; c < field.hidden; ++c) acc += wrow[c] * hidden[c];
        raw[orow] = acc;
    }

    if (tape) {
        tape->position = position;
        tape->tau = tau;
        tape->planes = planes;
        tape->fused = fused;
        tape->hidden = hidden;
        tape->raw_out = raw;
    }

    DeformationDelta delta;
    delta.d_position = {raw[0], raw[1]};
    delta.d_log_scaling = {raw[2], raw[3]};
    delta.d_opacity_logit.assign(raw.begin() + 4, raw.end());
    return delta;
}

void query_backward(const DeformationField& field, const DeformQueryTape& tape,
                    const DeformationDelta& upstream, const std::string& prefix,
                    GradBuffer& grads) {
    const int out_dim = field.out_dim();
    std::vector<double> d_raw(out_dim);
    d_raw[0] = upstream.d_position.x;
    d_raw[1] = upstream.d_position.y;
    d_raw[2] = upstream.d_log_scaling.x;
    d_raw[3] = upstream.d_log_scaling.y;
    for (int i = 0; i < field.slots; ++i) d_raw[4 + i] = upstream.d_opacity_logit[i];

    auto& d_w2 = grads.at(prefix + "w2");
    auto& d_b2 = grads.at(prefix + "b2");
    auto& d_w1 = grads.at(prefix + "w1");
    auto& d_b1 = grads.at(prefix + "b1");

    std::vector<double> d_hidden(field.hidden, 0.0);
    for (int orow = 0; orow < out_dim; ++orow) {
        const double dv = d_raw[orow];
        if (dv == 0.0) continue;
        double* wrow = d_w2.data() + static_cast<size_t>(orow) * field.hidden;
        const double* w2row = field.w2.data() + static_cast<size_t>(orow) * field.hidden;
        for (int c = 0; c < field.hidden; ++c) {
            wrow[c] += dv * tape.hidden[c];
            d_hidden[c] += dv * w2row[c];
        }
        d_b2[orow] += dv;
    }

    std::vector<double> d_fused(field.channels, 0.0);
    for (int hrow = 0; hrow < field.hidden; ++hrow) {
        const double d_pre = d_hidden[hrow] * (1.0 - tape.hidden[hrow] * tape.hidden[hrow]);
        if (d_pre == 0.0) continue;
        double* wrow = d_w1.data() + static_cast<size_t>(hrow) * field.channels;
        const double* w1row = field.w1.data() + static_cast<size_t>(hrow) * field.channels;
        for (int c = 0; c < field.channels; ++c) {
            wrow[c] += d_pre * tape.fused[c];
            d_fused[c] += d_pre * w1row[c];
        }
        d_b1[hrow] += d_pre;
    }

    // Product fusion: d xy = d_fused * xt * yt, etc.
    std::vector<double> d_xy(field.channels), d_xt(field.channels), d_yt(field.channels);
    for (int c = 0; c < field.channels; ++c) {
        d_xy[c] = d_fused[c] * tape.planes.xt[c] * tape.planes.yt[c];
        d_xt[c] = d_fused[c] * tape.planes.xy[c] * tape.planes.yt[c];
        d_yt[c] = d_fused[c] * tape.planes.xy[c] * tape.planes.xt[c];
    }

    const GridCoords c = grid_coords(field, tape.position, tape.tau);
    scatter_plane(grads.at(prefix + "grid_xy"), field.grid_res, field.channels, c.ux, c.uy,
                  d_xy.data());
    scatter_plane(grads.at(prefix + "grid_xt"), field.grid_res, field.channels, c.ux, c.ut,
                  d_xt.data());
    scatter_plane(grads.at(prefix + "grid_yt"), field.grid_res, field.channels, c.uy, c.ut,
                  d_yt.data());
}

AnchorDeformState apply_deformation(const AnchorSpace& space, size_t k,
                                    const DeformationDelta& delta) {
    return apply_deformation(canonical_state(space, k), delta);
}

AnchorDeformState apply_deformation(const AnchorDeformState& state, const DeformationDelta& delta) {
    AnchorDeformState st = state;
    st.position += delta.d_position;
    st.log_scaling += delta.d_log_scaling;
    const size_t n = std::min(st.opacity_logit_delta.size(), delta.d_opacity_logit.size());
    for (size_t i = 0; i < n; ++i) st.opacity_logit_delta[i] += delta.d_opacity_logit[i];
    return st;
}

DeformationDelta negate(const DeformationDelta& delta) {
    DeformationDelta n;
    n.d_position = delta.d_position * -1.0;
    n.d_log_scaling = delta.d_log_scaling * -1.0;
    n.d_opacity_logit.resize(delta.d_opacity_logit.size());
    for (size_t i = 0; i < delta.d_opacity_logit.size(); ++i)
        n.d_opacity_logit[i] = -delta.d_opacity_logit[i];
    return n;
}

}  // namespace morel
