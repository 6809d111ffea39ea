#pragma once

#include <filesystem>
#include <fstream>

#include "morel/config.hpp"
#include "morel/dataset.hpp"
#include "morel/fhd.hpp"
#include "morel/model_forward.hpp"
#include "morel/store.hpp"

namespace morel {

struct TrainPlan {
    int total_frames = 240;
    int gop = 40;
    int eps_tolerance = 2;
    int iters_gca = 3000;
    int iters_kfa = 1000;
    int iters_pwd = 2000;
    int iters_ifb = 500;
    uint64_t seed = 1;

    int num_keyframes() const { return (total_frames + gop - 1) / gop; }  // ceil(T / GOP)
    int keyframe_time(int n) const { return n * gop; }
};

enum class WindowKind { Chunk, Bdw, Eps };

struct FrameRange {
    int lo = 0;
    int hi = 0;  // inclusive

    bool contains(int t) const { return t >= lo && t <= hi; }
    int count() const { return hi - lo + 1; }
};

// Chunk_n = [t_n, t_n+GOP]; BDW_n = [max(0, t_n-GOP), min(t_n+GOP, T-1)];
// Eps_n = [max(0, t_n-eps), min(t_n+eps, T-1)]. Every window clamps to
// [0, T-1].
FrameRange window_of(WindowKind kind, int n, const TrainPlan& plan);

struct TrainerConfig {
    TrainPlan plan;
    LossConfig loss;
    BlendConfig blend;
    DensifyConfig densify;
    RenderOptions render_opts;
    LrTable lr;

    bool fhd_enabled = true;
    double fhd_q1 = 0.6, fhd_q2 = 0.9;
    double prune_freeze_frac = 0.2;  // pruning disabled in this tail of PWD

    double lambda_id = 1e-2;
    int deform_grid_res = 16, deform_channels = 8, deform_hidden = 32;

    int feature_dim = 16, slots = 4, hidden = 32;
    double grid_voxel = 0.4;

    int points_per_frame = 1500;
    int num_sample_frames = 4;
    double points_jitter = 0.08;
    double decimate_voxel = 0.01;
    int max_points = 60000;

    int log_every = 50;
};

TrainerConfig trainer_config_from(const Config& cfg, int total_frames);

// One IFB optimization step over a chunk frame: only the forward blend
// parameters of kfa_n and the backward ones of kfa_n1 are trainable; anchors,
// decoders and deformation fields stay frozen. With check_frozen set, a
// full-size gradient buffer is audited and FrozenLeak is thrown if any frozen
// array picked up gradient.
struct IfbStepResult {
    double loss = 0.0;
    double psnr = 0.0;
};
IfbStepResult train_ifb_step(AnchorSpace& kfa_n, DeformationField& field_n, AnchorSpace& kfa_n1,
                             DeformationField& field_n1, int t, int gop, const ViewTransform& view,
                             const Image& target, const LossConfig& loss_cfg,
                             const BlendConfig& blend_cfg, const RenderOptions& render_opts,
                             OptimizerState& opt, const LrTable& lr, bool check_frozen = false);

// The relay scheduler: GCA -> KfA -> PWD -> IFB with on-demand bundle
// residency. Stages are resumable: completed bundles (recognized by their
// stage markers) are skipped.
class Trainer {
public:
    Trainer(const Dataset& data, AnchorStore& store, TrainerConfig cfg);

    void run();

    void train_gca();
    void train_kfa(int n);
    void train_pwd(int n);
    void train_ifb(int n);

    // Naive chunk-wise bidirectional training (contamination study): chunk c
    // jointly trains (KfA_c forward, KfA_{c+1} backward) with densification
    // and fixed linear blending, re-touching the shared keyframe anchor.
    void train_naive_chunk(int c);

    bool gca_done() const;
    bool kfa_done(int n) const;
    bool pwd_done(int n) const;
    bool ifb_done(int n) const;

    int64_t global_step() const { return global_step_; }

private:
    struct StepOutcome {
        double loss = 0.0;
        double psnr = 0.0;
    };

    StepOutcome optimize_step(std::vector<SpaceInput>& inputs, const ViewTransform& view,
                              const Image& target, ParamSet& params, OptimizerState& opt,
                              bool with_identity_reg, AnchorSpace* fhd_space, int j, int total_j);
    void maybe_densify(AnchorSpace& space, OptimizerState& opt, const std::string& stage, int n,
                       int j, int total_j, Rng& rng, bool allow_prune);

    // Most recent rendered (possibly deformed) Gaussian centers of the space
    // being densified; growth candidates per the level-wise scheme.
    std::vector<Vec2> last_centers_;
    void log_step(const std::string& stage, int n, int j, const StepOutcome& out);

    const Dataset& data_;
    AnchorStore& store_;
    TrainerConfig cfg_;
    std::ofstream log_;
    int64_t global_step_ = 0;
};

// Builds the initialization point cloud from the dataset's oracle states:
// positions sampled at evenly spread frames, merged, then voxel-decimated.
std::vector<Vec2> build_initial_point_cloud(const Dataset& data, const TrainerConfig& cfg);

}  // namespace morel
