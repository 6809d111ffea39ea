#pragma once

#include <vector>

#include "morel/renderer.hpp"
#include "morel/scene_model.hpp"

namespace morel {

struct LevelThresholds {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double q1 = 0.6;
    double q2 = 0.9;
};

struct DensifyConfig {
    double grad_threshold = 2e-4;     // mean accumulated screen-gradient norm
    double opacity_threshold = 5e-3;  // prune below this running max
    int success_min = 50;             // observations before pruning applies
    double lambda_level1 = 0.5;       // initial importance, level 1
    double lambda_level2 = 0.25;      // initial importance, level 2
    int interval = 100;               // steps between grow/prune passes
    double feature_noise = 0.01;      // perturbation for grown anchors
    // false = plain densification baseline: every level weighted 1.
    bool leveled = true;
    // Densification stops after this fraction of the stage's iterations.
    double stop_frac = 0.7;
};

// Nearest-rank quantile used for the level thresholds: sorted[floor(q * n)],
// 0-based. Deterministic under ties.
double nearest_rank_quantile(std::vector<double> values, double q);

// Per-anchor feature variance (population variance over the F components).
std::vector<double> feature_variances(const AnchorSpace& space);

// Eq.-style variance leveling: level 0 below tau1, level 1 in [tau1, tau2),
// level 2 at or above tau2, with tau1/tau2 the empirical q1/q2 quantiles of
// the variances. When every variance is equal the quantiles coincide and all
// anchors land at level 2. Requires at least 3 anchors.
LevelThresholds assign_levels(AnchorSpace& space, double q1, double q2);

// Level-importance schedule: 1 for level 0, otherwise a linear ramp from
// lambda_level to 1 over the stage's normalized progress j/J.
double level_weight(int level, int step, int total_steps, double lambda_level);

double lambda_for_level(const DensifyConfig& cfg, int level);

// Per-step statistics accumulation. `render_grads` are the union-order
// renderer gradients; `gauss_begin` locates this space's Gaussians. Only
// anchors visible in the view (a Gaussian bbox intersecting the image) are
// counted.
void accumulate_stats(AnchorSpace& space, const std::vector<GaussianGrad>& render_grads,
                      const RenderTape& render, size_t gauss_begin,
                      const std::vector<double>& decoded_opacity, int step, int total_steps,
                      const DensifyConfig& cfg);

struct DensifyReport {
    int grown = 0;
    int pruned = 0;
    size_t total_after = 0;
};

// Growth quantizes the canonical positions of Gaussians belonging to anchors
// over the gradient threshold; unoccupied voxel cells gain a child anchor
// (parent feature + noise, inherited level). Pruning removes anchors observed
// at least success_min times whose best opacity stayed below the threshold.
// Stats reset afterwards.
DensifyReport grow_and_prune(AnchorSpace& space, const DensifyConfig& cfg, Rng& rng,
                             bool allow_prune = true,
                             const std::vector<Vec2>* candidate_centers = nullptr);

}  // namespace morel
