#include "morel/fhd.hpp"

#include <algorithm>
#include <set>

namespace morel {

double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile of empty set");
    std::sort(values.begin(), values.end());
    const size_t idx = std::min(values.size() - 1,
                                static_cast<size_t>(std::floor(q * static_cast<double>(values.size()))));
    return values[idx];
}

std::vector<double> feature_variances(const AnchorSpace& space) {
    const size_t count = space.anchor_count();
    const int dim = space.feature_dim;
    std::vector<double> variances(count);
    for (size_t k = 0; k < count; ++k) {
        const double* f = space.features.data() + k * dim;
        double mean = 0.0;
        for (int i = 0; i < dim; ++i) mean += f[i];
        mean /= dim;
        double var = 0.0;
        for (int i = 0; i < dim; ++i) var += (f[i] - mean) * (f[i] - mean);
        variances[k] = var / dim;
    }
    return variances;
}

LevelThresholds assign_levels(AnchorSpace& space, double q1, double q2) {
    if (space.anchor_count() < 3) throw InvalidInput("assign_levels: fewer than 3 anchors");
    if (!(0.0 < q1 && q1 < q2 && q2 < 1.0)) throw InvalidInput("assign_levels: need 0 < q1 < q2 < 1");

    const std::vector<double> variances = feature_variances(space);
    LevelThresholds th;
    th.q1 = q1;
    th.q2 = q2;
    th.tau1 = nearest_rank_quantile(variances, q1);
    th.tau2 = nearest_rank_quantile(variances, q2);

    for (size_t k = 0; k < variances.size(); ++k) {
        if (variances[k] < th.tau1)
            space.levels[k] = 0;
        else if (variances[k] < th.tau2)
            space.levels[k] = 1;
        else
            space.levels[k] = 2;
    }
    return th;
}

double level_weight(int level, int step, int total_steps, double lambda_level) {
    if (level == 0) return 1.0;
    const double eta = static_cast<double>(step) / static_cast<double>(total_steps);
    return lambda_level + (1.0 - lambda_level) * eta;
}

double lambda_for_level(const DensifyConfig& cfg, int level) {
    if (level <= 0) return 1.0;
    return level == 1 ? cfg.lambda_level1 : cfg.lambda_level2;
}

void accumulate_stats(AnchorSpace& space, const std::vector<GaussianGrad>& render_grads,
                      const RenderTape& render, size_t gauss_begin,
                      const std::vector<double>& decoded_opacity, int step, int total_steps,
                      const DensifyConfig& cfg) {
    const int slots = space.slots;
    for (size_t k = 0; k < space.anchor_count(); ++k) {
        bool visible = false;
        double grad_sum = 0.0;
        double best_opacity = 0.0;
        for (int i = 0; i < slots; ++i) {
            const size_t gi = gauss_begin + k * slots + i;
            const ProjectedGaussian& p = render.projected[gi];
            if (p.x1 >= p.x0 && p.y1 >= p.y0) visible = true;
            grad_sum += render_grads[gi].d_screen.norm();
            best_opacity = std::max(best_opacity, decoded_opacity[k * slots + i]);
        }
        if (!visible) continue;

        const double w = cfg.leveled
                             ? level_weight(space.levels[k], step, total_steps,
                                            lambda_for_level(cfg, space.levels[k]))
                             : 1.0;
        space.accum_grad[k] += w * grad_sum;
        space.accum_count[k] += 1;
        space.opacity_stat[k] = std::max(space.opacity_stat[k], best_opacity);
    }
}

DensifyReport grow_and_prune(AnchorSpace& space, const DensifyConfig& cfg, Rng& rng,
                             bool allow_prune, const std::vector<Vec2>* candidate_centers) {
    DensifyReport report;
    const double voxel = space.grid_voxel;
    const int slots = space.slots;

    auto cell_of = [voxel](const Vec2& p) {
        return std::pair<int64_t, int64_t>{static_cast<int64_t>(std::floor(p.x / voxel)),
                                           static_cast<int64_t>(std::floor(p.y / voxel))};
    };

    std::set<std::pair<int64_t, int64_t>> occupied;
    for (size_t k = 0; k < space.anchor_count(); ++k) occupied.insert(cell_of(space.position(k)));

    // Growth: candidate positions are the canonical Gaussian centers of
    // anchors whose mean accumulated gradient exceeds the threshold.
    const size_t original_count = space.anchor_count();
    std::vector<double> child_feature(space.feature_dim);
    std::vector<double> child_offsets(static_cast<size_t>(slots) * 2);
    for (size_t k = 0; k < original_count; ++k) {
        if (space.accum_count[k] == 0) continue;
        const double mean_grad = space.accum_grad[k] / space.accum_count[k];
        if (!(mean_grad > cfg.grad_threshold)) continue;

        const Vec2 pos = space.position(k);
        const double sx = std::exp(space.log_scalings[2 * k]);
        const double sy = std::exp(space.log_scalings[2 * k + 1]);
        for (int i = 0; i < slots; ++i) {
            // Candidate positions are where the Gaussians currently render
            // (deformed when a field is active); canonical placement is the
            // fallback.
            Vec2 center{pos.x + sx * space.offsets[(k * slots + i) * 2],
                        pos.y + sy * space.offsets[(k * slots + i) * 2 + 1]};
            if (candidate_centers) {
                center = (*candidate_centers)[k * slots + i];
                // Deformed candidates can leave the scene; anchors must not.
                if (center.x < space.bbox_min.x || center.x > space.bbox_max.x ||
                    center.y < space.bbox_min.y || center.y > space.bbox_max.y)
                    continue;
            }
            const auto cell = cell_of(center);
            if (occupied.count(cell)) continue;
            occupied.insert(cell);

            for (int f = 0; f < space.feature_dim; ++f)
                child_feature[f] = space.features[k * space.feature_dim + f] +
                                   rng.normal(0.0, cfg.feature_noise);
            // Fresh offset jitter: the child gets its own candidate cells
            // instead of re-proposing the parent's.
            for (auto& o : child_offsets) o = rng.uniform(-0.5, 0.5);
            space.append_anchor(center, child_feature, space.log_scaling(k), child_offsets,
                                space.levels[k]);
            report.grown += 1;
        }
    }

    // Pruning considers only the original anchors; children have no stats yet.
    if (allow_prune) {
        std::vector<char> remove(space.anchor_count(), 0);
        for (size_t k = 0; k < original_count; ++k) {
            if (space.accum_count[k] >= cfg.success_min &&
                space.opacity_stat[k] < cfg.opacity_threshold) {
                remove[k] = 1;
                report.pruned += 1;
            }
        }
        if (report.pruned > 0) space.remove_anchors(remove);
    }

    space.reset_stats();
    report.total_after = space.anchor_count();
    return report;
}

}  // namespace morel
