#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morel/common.hpp"
#include "morel/params.hpp"
#include "morel/renderer.hpp"
#include "morel/view.hpp"

namespace morel {

// Two-layer perceptron mapping concat(anchor feature, view code) to the raw
// attribute block of the anchor's neural Gaussians. Per Gaussian slot the
// block is [r, g, b, opacity, rotation, log_scale_mult_x, log_scale_mult_y,
// depth_key]; colors and opacity pass through a sigmoid so a zero-weight
// decoder emits 0.5 everywhere.
struct DecoderWeights {
    int feature_dim = 16;
    int slots = 4;    // Gaussians per anchor (I)
    int hidden = 32;

    std::vector<double> w1, b1;  // hidden x (F+2), hidden
    std::vector<double> w2, b2;  // out x hidden, out

    int in_dim() const { return feature_dim + 2; }
    int out_dim() const { return slots * 8; }

    void init_random(Rng& rng);
    size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

enum class SpaceKind { Global, Key };

// Sparse-grid canonical scene. Struct-of-arrays so trainable fields expose
// directly as flat parameter arrays. Anchor positions are fixed once created;
// only growth adds new ones, which keeps voxel-cell uniqueness exact.
struct AnchorSpace {
    SpaceKind kind = SpaceKind::Global;
    int key_index = -1;     // n, for Key spaces
    int key_frame = -1;     // t_n = n * GOP

    int feature_dim = 16;
    int slots = 4;

    double grid_voxel = 0.25;
    Vec2 bbox_min{0.0, 0.0};
    Vec2 bbox_max{1.0, 1.0};

    std::vector<double> positions;     // K x 2 (not trainable)
    std::vector<double> features;      // K x F
    std::vector<double> log_scalings;  // K x 2
    std::vector<double> offsets;       // K x I x 2
    std::vector<int32_t> levels;       // K, -1 while unassigned

    // Learnable temporal-opacity parameters; decay is stored raw and passed
    // through softplus.
    std::vector<double> blend_o_fw, blend_d_fw;  // K
    std::vector<double> blend_o_bw, blend_d_bw;  // K

    // Densification statistics.
    std::vector<double> accum_grad;     // K
    std::vector<int32_t> accum_count;   // K
    std::vector<double> opacity_stat;   // K

    DecoderWeights decoder;

    size_t anchor_count() const { return positions.size() / 2; }
    Vec2 position(size_t k) const { return {positions[2 * k], positions[2 * k + 1]}; }
    Vec2 log_scaling(size_t k) const { return {log_scalings[2 * k], log_scalings[2 * k + 1]}; }

    bool levels_assigned() const;
    void reset_stats();
    void append_anchor(const Vec2& pos, const std::vector<double>& feature, const Vec2& log_scaling,
                       const std::vector<double>& anchor_offsets, int32_t level);
    void remove_anchors(const std::vector<char>& remove_mask);

    // Trainable arrays as a ParamSet; names are prefixed so two spaces can
    // share one GradBuffer during blending.
    ParamSet trainable_params(const std::string& prefix, bool include_blend);
};

// Deformed per-anchor state consumed by the decoder. Zero deltas reproduce
// the canonical anchor.
struct AnchorDeformState {
    Vec2 position;
    Vec2 log_scaling;
    std::vector<double> opacity_logit_delta;  // I entries
};

AnchorDeformState canonical_state(const AnchorSpace& space, size_t k);

// Intermediates for one anchor's decode, replayed by the backward pass.
struct DecodeTape {
    std::vector<double> input;    // F + 2
    std::vector<double> hidden;   // tanh activations
    std::vector<double> raw_out;  // I x 8
    AnchorDeformState state;
    // Cached per-slot values.
    std::vector<double> sx, sy;            // per-slot scale (exp of log)
    std::vector<double> cos_t, sin_t;
    std::vector<double> opacity;           // post-sigmoid
    std::vector<Vec3> color;               // post-sigmoid
};

// Decodes anchor k into its I neural Gaussians.
//   center_i = position + exp(log_scaling) .* offsets_i
//   cov_i    = R(theta_i) diag(s_i^2) R(theta_i)^T,  s_i = exp(log_scaling + mult_i)
std::vector<GaussianAttributes> decode_anchor(const AnchorSpace& space, size_t k,
                                              const AnchorDeformState& state,
                                              const Vec2& view_code, DecodeTape* tape);

// Gradients produced by decode_anchor's backward pass. d_state_* are w.r.t.
// the (possibly deformed) anchor state: the trainable log_scaling and the
// deformation deltas both receive them through identity chains.
struct DecodeGrads {
    std::vector<double> d_feature;          // F
    std::vector<double> d_offsets;          // I x 2
    Vec2 d_state_position;
    Vec2 d_state_log_scaling;
    std::vector<double> d_opacity_delta;    // I
};

// upstream: per-slot gradients from the renderer, d_opacity w.r.t. the
// decoded (pre-blend) opacity. Decoder weight gradients accumulate into the
// provided flat arrays.
DecodeGrads decode_anchor_backward(const AnchorSpace& space, size_t k, const DecodeTape& tape,
                                   const std::vector<GaussianGrad>& upstream,
                                   const std::vector<double>& d_opacity_decoded,
                                   std::vector<double>& d_w1, std::vector<double>& d_b1,
                                   std::vector<double>& d_w2, std::vector<double>& d_b2);

// One anchor per occupied voxel cell, placed at the cell's centroid of
// contributing points. Features ~ N(0, 0.1), scaling = grid_voxel, offsets
// jittered in [-0.5, 0.5] * grid_voxel.
AnchorSpace init_anchor_space(const std::vector<Vec2>& points, double grid_voxel, uint64_t seed,
                              int feature_dim = 16, int slots = 4, int hidden = 32);

// Deep copy of a level-assigned global space re-tagged Key(n, n*GOP), with
// stats reset and blend parameters at their initial values.
AnchorSpace derive_keyframe_space(const AnchorSpace& global, int n, int gop);

// Initial raw decay such that softplus(raw) = 1.
double initial_blend_decay_raw();

}  // namespace morel
