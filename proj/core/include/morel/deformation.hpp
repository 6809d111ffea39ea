#pragma once

#include <vector>

#include "morel/common.hpp"
#include "morel/params.hpp"
#include "morel/scene_model.hpp"

namespace morel {

// Normalized relative time between neighboring keyframes; -1 and 1 are the
// backward and forward window endpoints.
struct RelativeTime {
    double tau = 0.0;
};

// tau = (t - t_n) / gop, valid inside BDW_n = [max(0, t_n-gop), min(t_n+gop, T-1)].
RelativeTime normalize_time(int t, int t_n, int gop, int total_frames);

struct DeformationDelta {
    Vec2 d_position;
    Vec2 d_log_scaling;
    std::vector<double> d_opacity_logit;  // one per Gaussian slot
};

// Bidirectional deformation of one keyframe anchor space. Three factor grids
// over (x,y), (x,tau), (y,tau) are sampled bilinearly, fused by element-wise
// product and decoded by a two-layer MLP whose output layer starts at zero so
// the field is the identity at initialization.
struct DeformationField {
    int grid_res = 16;
    int channels = 8;
    int hidden = 32;
    int slots = 4;         // opacity outputs per anchor
    int owner_index = -1;  // n of the owning KfA
    Vec2 bbox_min{0.0, 0.0};
    Vec2 bbox_max{1.0, 1.0};

    std::vector<double> grid_xy, grid_xt, grid_yt;  // channels x res x res each
    std::vector<double> w1, b1;                     // hidden x channels, hidden
    std::vector<double> w2, b2;                     // out x hidden, out

    int out_dim() const { return 4 + slots; }

    ParamSet trainable_params(const std::string& prefix);
};

DeformationField make_deformation_field(const AnchorSpace& owner, int grid_res, int channels,
                                        int hidden, uint64_t seed);

// Bilinear sample of one plane grid at continuous coordinates (u, v) in
// [0, res-1]; exposed for the node-exactness and bilinearity oracles.
void sample_plane(const std::vector<double>& grid, int res, int channels, double u, double v,
                  double* out);

// The three plane features at (position, tau) before fusion.
struct PlaneSamples {
    std::vector<double> xy, xt, yt;
};
PlaneSamples sample_planes(const DeformationField& field, const Vec2& position, double tau);

struct DeformQueryTape {
    Vec2 position;
    double tau = 0.0;
    PlaneSamples planes;
    std::vector<double> fused;
    std::vector<double> hidden;
    std::vector<double> raw_out;
};

// Positions outside the bbox clamp; |tau| must be <= 1.
DeformationDelta query(const DeformationField& field, const Vec2& position, double tau,
                       DeformQueryTape* tape);

// Accumulates gradients w.r.t. grids and decoder into `grads` (arrays named
// with `prefix` as in trainable_params).
void query_backward(const DeformationField& field, const DeformQueryTape& tape,
                    const DeformationDelta& upstream, const std::string& prefix,
                    GradBuffer& grads);

// position += d_position; log_scaling += d_log_scaling; opacity logits
// accumulate per slot. Features untouched.
AnchorDeformState apply_deformation(const AnchorSpace& space, size_t k,
                                    const DeformationDelta& delta);
AnchorDeformState apply_deformation(const AnchorDeformState& state, const DeformationDelta& delta);

DeformationDelta negate(const DeformationDelta& delta);

}  // namespace morel
