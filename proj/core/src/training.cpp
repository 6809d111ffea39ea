#include "morel/training.hpp"

#include "morel/metrics.hpp"
#include "morel/scenegen.hpp"

namespace morel {

FrameRange window_of(WindowKind kind, int n, const TrainPlan& plan) {
    if (n < 0 || n >= plan.num_keyframes())
        throw InvalidInput("window_of: keyframe index " + std::to_string(n) + " out of range");
    const int t_n = plan.keyframe_time(n);
    const int last = plan.total_frames - 1;
    switch (kind) {
        case WindowKind::Chunk:
            return {t_n, std::min(t_n + plan.gop, last)};
        case WindowKind::Bdw:
            return {std::max(0, t_n - plan.gop), std::min(t_n + plan.gop, last)};
        case WindowKind::Eps:
            return {std::max(0, t_n - plan.eps_tolerance),
                    std::min(t_n + plan.eps_tolerance, last)};
    }
    throw InvalidInput("window_of: bad kind");
}

TrainerConfig trainer_config_from(const Config& cfg, int total_frames) {
    TrainerConfig tc;
    tc.plan.total_frames = total_frames;
    tc.plan.gop = cfg.get_int("train.gop");
    tc.plan.eps_tolerance = cfg.get_int("train.eps");
    tc.plan.iters_gca = cfg.get_int("train.iters_gca");
    tc.plan.iters_kfa = cfg.get_int("train.iters_kfa");
    tc.plan.iters_pwd = cfg.get_int("train.iters_pwd");
    tc.plan.iters_ifb = cfg.get_int("train.iters_ifb");
    tc.plan.seed = static_cast<uint64_t>(cfg.get_int("train.seed"));

    tc.loss.lambda_ssim = cfg.get_double("loss.lambda_ssim");
    tc.blend.lambda_decay = cfg.get_double("blend.lambda_decay");

    tc.densify.grad_threshold = cfg.get_double("fhd.grad_threshold");
    tc.densify.opacity_threshold = cfg.get_double("fhd.opacity_threshold");
    tc.densify.success_min = cfg.get_int("fhd.success_min");
    tc.densify.lambda_level1 = cfg.get_double("fhd.lambda1");
    tc.densify.lambda_level2 = cfg.get_double("fhd.lambda2");
    tc.densify.interval = cfg.get_int("fhd.interval");
    tc.fhd_enabled = cfg.get_bool("fhd.enabled");
    tc.densify.leveled = cfg.get_bool("fhd.leveled");
    tc.densify.stop_frac = cfg.get_double("fhd.stop_frac");
    tc.fhd_q1 = cfg.get_double("fhd.q1");
    tc.fhd_q2 = cfg.get_double("fhd.q2");
    tc.prune_freeze_frac = cfg.get_double("fhd.prune_freeze_frac");

    tc.lambda_id = cfg.get_double("deform.lambda_id");
    tc.deform_grid_res = cfg.get_int("deform.grid_res");
    tc.deform_channels = cfg.get_int("deform.channels");
    tc.deform_hidden = cfg.get_int("deform.hidden");

    tc.feature_dim = cfg.get_int("model.feature_dim");
    tc.slots = cfg.get_int("model.gaussians_per_anchor");
    tc.hidden = cfg.get_int("model.hidden_dim");
    tc.grid_voxel = cfg.get_double("model.grid_voxel");

    tc.lr = LrTable{
        {"features", cfg.get_double("lr.features")},
        {"offsets", cfg.get_double("lr.offsets")},
        {"scalings", cfg.get_double("lr.scalings")},
        {"decoder", cfg.get_double("lr.decoder")},
        {"deform_grids", cfg.get_double("lr.deform_grids")},
        {"deform_decoder", cfg.get_double("lr.deform_decoder")},
        {"blend", cfg.get_double("lr.blend")},
    };

    tc.render_opts.cull_sigma = cfg.get_double("render.cull_sigma");
    tc.render_opts.threads = cfg.get_int("render.threads");

    tc.points_per_frame = cfg.get_int("points.per_frame");
    tc.num_sample_frames = cfg.get_int("points.num_sample_frames");
    tc.points_jitter = cfg.get_double("points.jitter");
    tc.decimate_voxel = cfg.get_double("points.decimate_voxel");
    tc.max_points = cfg.get_int("points.max_points");

    tc.log_every = cfg.get_int("train.log_every");
    return tc;
}

std::vector<Vec2> build_initial_point_cloud(const Dataset& data, const TrainerConfig& cfg) {
    const auto states = read_oracle_states(data.dir);
    if (states.empty()) throw NotFound("dataset has no oracle states");

    std::vector<int> frames_at;
    const int n = std::max(1, cfg.num_sample_frames);
    if (n == 1) {
        frames_at = {0};
    } else {
        for (int i = 0; i < n; ++i)
            frames_at.push_back(
                static_cast<int>(static_cast<int64_t>(i) * (data.frames - 1) / (n - 1)));
    }

    Rng rng(cfg.plan.seed, 47);
    std::vector<Vec2> points;
    for (int t : frames_at) {
        const auto& state = states.at(t);
        for (int i = 0; i < cfg.points_per_frame; ++i) {
            const auto& g = state[rng.uniform_index(static_cast<uint32_t>(state.size()))];
            points.push_back({g.center.x + rng.normal(0.0, cfg.points_jitter),
                              g.center.y + rng.normal(0.0, cfg.points_jitter)});
        }
    }
    return voxel_decimate(points, cfg.decimate_voxel, cfg.max_points);
}

IfbStepResult train_ifb_step(AnchorSpace& kfa_n, DeformationField& field_n, AnchorSpace& kfa_n1,
                             DeformationField& field_n1, int t, int gop, const ViewTransform& view,
                             const Image& target, const LossConfig& loss_cfg,
                             const BlendConfig& blend_cfg, const RenderOptions& render_opts,
                             OptimizerState& opt, const LrTable& lr, bool check_frozen) {
    const int t_n = kfa_n.key_frame;
    if (t < t_n || t > t_n + gop) throw OutOfWindow("IFB frame outside chunk");

    std::vector<SpaceInput> inputs{
        {&kfa_n, &field_n, static_cast<double>(t - t_n) / gop, BlendDirection::Forward, 1.0, "a."},
        {&kfa_n1, &field_n1, static_cast<double>(t - kfa_n1.key_frame) / gop,
         BlendDirection::Backward, 1.0, "b."},
    };

    FrameForward fwd = forward_frame(inputs, view, blend_cfg, render_opts);
    const LossResult loss = photometric_loss(fwd.render.image, target, loss_cfg);

    // Only the used blend directions are trainable.
    ParamSet blend_params;
    blend_params.add("a.blend_o_fw", {kfa_n.blend_o_fw.data(), kfa_n.blend_o_fw.size()}, "blend");
    blend_params.add("a.blend_d_fw", {kfa_n.blend_d_fw.data(), kfa_n.blend_d_fw.size()}, "blend");
    blend_params.add("b.blend_o_bw", {kfa_n1.blend_o_bw.data(), kfa_n1.blend_o_bw.size()},
                     "blend");
    blend_params.add("b.blend_d_bw", {kfa_n1.blend_d_bw.data(), kfa_n1.blend_d_bw.size()},
                     "blend");

    if (check_frozen) {
        // Audit a full-size buffer: every non-blend array must stay at zero.
        ParamSet full_a = kfa_n.trainable_params("a.", true);
        ParamSet full_b = kfa_n1.trainable_params("b.", true);
        ParamSet all;
        for (auto* ps : {&full_a, &full_b})
            for (auto& arr : ps->arrays()) all.add(arr.name, arr.values, arr.group);
        {
            ParamSet fa = field_n.trainable_params("a.deform.");
            ParamSet fb = field_n1.trainable_params("b.deform.");
            for (auto* ps : {&fa, &fb})
                for (auto& arr : ps->arrays()) all.add(arr.name, arr.values, arr.group);
        }
        GradBuffer audit(all);
        backward_frame_blend_only(fwd, loss.d_image, audit);
        for (const auto& name : audit.names()) {
            const bool is_trained = blend_params.has(name);
            if (!is_trained && audit.inf_norm(name) != 0.0)
                throw FrozenLeak("gradient leaked into frozen array " + name);
        }
        GradBuffer grads(blend_params);
        backward_frame_blend_only(fwd, loss.d_image, grads);
        adam_step(blend_params, grads, opt, lr);
    } else {
        GradBuffer grads(blend_params);
        backward_frame_blend_only(fwd, loss.d_image, grads);
        adam_step(blend_params, grads, opt, lr);
    }

    IfbStepResult res;
    res.loss = loss.loss;
    res.psnr = psnr(fwd.render.image, target);
    return res;
}

Trainer::Trainer(const Dataset& data, AnchorStore& store, TrainerConfig cfg)
    : data_(data), store_(store), cfg_(std::move(cfg)) {
    log_.open(store_.dir() / "train_log.txt", std::ios::app);
}

bool Trainer::gca_done() const { return store_.exists(BundleKey{true, -1}); }

bool Trainer::kfa_done(int n) const {
    const BundleKey key{false, n};
    return store_.exists(key) && store_.peek(key).meta.stage >= 0;
}

bool Trainer::pwd_done(int n) const {
    const BundleKey key{false, n};
    return store_.exists(key) && store_.peek(key).meta.stage >= 1;
}

bool Trainer::ifb_done(int n) const {
    const BundleKey a{false, n}, b{false, n + 1};
    return store_.exists(a) && store_.exists(b) && store_.peek(a).meta.ifb_fw != 0 &&
           store_.peek(b).meta.ifb_bw != 0;
}

void Trainer::log_step(const std::string& stage, int n, int j, const StepOutcome& out) {
    if (j % cfg_.log_every != 0) return;
    const auto report = store_.residency_report();
    char line[160];
    std::snprintf(line, sizeof(line),
                  "step=%lld stage=%s n=%d j=%d loss=%.6f psnr=%.3f keys=%d\n",
                  static_cast<long long>(global_step_), stage.c_str(), n, j, out.loss, out.psnr,
                  report.key_count);
    log_ << line;
    log_.flush();
}

Trainer::StepOutcome Trainer::optimize_step(std::vector<SpaceInput>& inputs,
                                            const ViewTransform& view, const Image& target,
                                            ParamSet& params, OptimizerState& opt,
                                            bool with_identity_reg, AnchorSpace* fhd_space, int j,
                                            int total_j) {
    FrameForward fwd = forward_frame(inputs, view, cfg_.blend, cfg_.render_opts);
    LossResult loss = photometric_loss(fwd.render.image, target, cfg_.loss);

    GradBuffer grads(params);
    const auto render_grads = backward_frame(fwd, loss.d_image, grads);

    double total_loss = loss.loss;
    for (const auto& in : inputs)
        if (in.field && with_identity_reg)
            total_loss += identity_regularizer(*in.space, *in.field, cfg_.lambda_id,
                                               in.prefix + "deform.", &grads);

    if (cfg_.fhd_enabled && fhd_space) {
        for (size_t s = 0; s < inputs.size(); ++s) {
            if (inputs[s].space != fhd_space) continue;
            accumulate_stats(*fhd_space, render_grads, fwd.render, fwd.parts[s].gauss_begin,
                             fwd.parts[s].decoded_opacity, j, total_j, cfg_.densify);
            const size_t begin = fwd.parts[s].gauss_begin;
            const size_t count = fhd_space->anchor_count() * fhd_space->slots;
            last_centers_.resize(count);
            for (size_t i = 0; i < count; ++i)
                last_centers_[i] = fwd.render.gaussians[begin + i].center;
        }
    }

    adam_step(params, grads, opt, cfg_.lr);

    StepOutcome out;
    out.loss = total_loss;
    out.psnr = psnr(fwd.render.image, target);
    global_step_ += 1;
    store_.set_clock(global_step_);
    return out;
}

void Trainer::maybe_densify(AnchorSpace& space, OptimizerState& opt, const std::string& stage,
                            int n, int j, int total_j, Rng& rng, bool allow_prune) {
    if (!cfg_.fhd_enabled) return;
    if (j == 0 || j % cfg_.densify.interval != 0) return;
    if (j > cfg_.densify.stop_frac * total_j) return;

    double max_mean_grad = 0.0;
    for (size_t k = 0; k < space.anchor_count(); ++k)
        if (space.accum_count[k] > 0)
            max_mean_grad = std::max(max_mean_grad, space.accum_grad[k] / space.accum_count[k]);

    const std::vector<Vec2>* candidates =
        last_centers_.size() == space.anchor_count() * space.slots ? &last_centers_ : nullptr;
    const DensifyReport report = grow_and_prune(space, cfg_.densify, rng, allow_prune, candidates);
    last_centers_.clear();
    if (report.grown > 0 || report.pruned > 0) {
        // Per-anchor arrays changed shape; drop their moments.
        for (const char* name : {"features", "log_scalings", "offsets", "blend_o_fw", "blend_d_fw",
                                 "blend_o_bw", "blend_d_bw"}) {
            opt.reset_array("a." + std::string(name));
            opt.reset_array("b." + std::string(name));
        }
    }
    char line[200];
    std::snprintf(line, sizeof(line),
                  "densify stage=%s n=%d step=%lld grown=%d pruned=%d total=%zu max_grad=%.2e\n",
                  stage.c_str(), n, static_cast<long long>(global_step_), report.grown,
                  report.pruned, report.total_after, max_mean_grad);
    log_ << line;
    log_.flush();
}

void Trainer::train_gca() {
    if (gca_done()) return;

    const auto points = build_initial_point_cloud(data_, cfg_);
    AnchorSpace global = init_anchor_space(points, cfg_.grid_voxel, cfg_.plan.seed,
                                           cfg_.feature_dim, cfg_.slots, cfg_.hidden);
    // Deformation queries clamp to the space bbox; use the dataset bbox so
    // grown anchors and moving content stay inside it.
    global.bbox_min = data_.bbox_min;
    global.bbox_max = data_.bbox_max;

    Rng rng = Rng(cfg_.plan.seed, 0).fork(1000);
    ParamSet params = global.trainable_params("a.", false);
    OptimizerState opt;

    std::vector<SpaceInput> inputs{{&global, nullptr, 0.0, BlendDirection::None, 1.0, "a."}};
    for (int j = 0; j < cfg_.plan.iters_gca; ++j) {
        const int m = static_cast<int>(rng.uniform_index(data_.num_views));
        const int t = static_cast<int>(rng.uniform_index(data_.frames));
        const Image target = data_.ground_truth(m, t);
        const StepOutcome out =
            optimize_step(inputs, data_.views[m], target, params, opt, false, nullptr, j,
                          cfg_.plan.iters_gca);
        log_step("GCA", -1, j, out);
    }

    assign_levels(global, cfg_.fhd_q1, cfg_.fhd_q2);

    Bundle bundle;
    bundle.space = std::move(global);
    bundle.meta.stage = 0;
    store_.save(BundleKey{true, -1}, bundle);
    log_ << "stage_done stage=GCA anchors=" << bundle.space.anchor_count() << "\n";
    log_.flush();
}

void Trainer::train_kfa(int n) {
    if (kfa_done(n)) return;

    const BundleKey gca_key{true, -1};
    Bundle global = store_.load(gca_key);

    const BundleKey key{false, n};
    Bundle derived;
    derived.space = derive_keyframe_space(global.space, n, cfg_.plan.gop);
    derived.meta.stage = 0;
    store_.save(key, derived);
    store_.unload(gca_key);

    Bundle bundle = store_.load(key);
    AnchorSpace& space = bundle.space;

    Rng rng = Rng(cfg_.plan.seed, 0).fork(2000 + n);
    Rng densify_rng = Rng(cfg_.plan.seed, 0).fork(2500 + n);
    OptimizerState opt;

    const FrameRange eps = window_of(WindowKind::Eps, n, cfg_.plan);
    std::vector<SpaceInput> inputs{{&space, nullptr, 0.0, BlendDirection::None, 1.0, "a."}};
    for (int j = 0; j < cfg_.plan.iters_kfa; ++j) {
        const int m = static_cast<int>(rng.uniform_index(data_.num_views));
        const int t = eps.lo + static_cast<int>(rng.uniform_index(eps.count()));
        const Image target = data_.ground_truth(m, t);
        ParamSet params = space.trainable_params("a.", false);
        const StepOutcome out = optimize_step(inputs, data_.views[m], target, params, opt, false,
                                              &space, j, cfg_.plan.iters_kfa);
        maybe_densify(space, opt, "KfA", n, j, cfg_.plan.iters_kfa, densify_rng, true);
        log_step("KfA", n, j, out);
    }

    bundle.meta.stage = 0;
    store_.save(key, bundle);
    store_.unload(key);
    log_ << "stage_done stage=KfA n=" << n << " anchors=" << space.anchor_count() << "\n";
    log_.flush();
}

void Trainer::train_pwd(int n) {
    if (pwd_done(n)) return;

    const BundleKey key{false, n};
    Bundle bundle = store_.load(key);
    AnchorSpace& space = bundle.space;
    if (!bundle.field) {
        bundle.field = make_deformation_field(space, cfg_.deform_grid_res, cfg_.deform_channels,
                                              cfg_.deform_hidden,
                                              cfg_.plan.seed ^ (0xD00Dull + n));
    }
    DeformationField& field = *bundle.field;

    Rng rng = Rng(cfg_.plan.seed, 0).fork(3000 + n);
    Rng densify_rng = Rng(cfg_.plan.seed, 0).fork(3500 + n);
    OptimizerState opt;

    const FrameRange bdw = window_of(WindowKind::Bdw, n, cfg_.plan);
    const int t_n = cfg_.plan.keyframe_time(n);
    std::vector<SpaceInput> inputs{{&space, &field, 0.0, BlendDirection::None, 1.0, "a."}};

    const int prune_cutoff =
        static_cast<int>((1.0 - cfg_.prune_freeze_frac) * cfg_.plan.iters_pwd);
    for (int j = 0; j < cfg_.plan.iters_pwd; ++j) {
        const int m = static_cast<int>(rng.uniform_index(data_.num_views));
        const int t = bdw.lo + static_cast<int>(rng.uniform_index(bdw.count()));
        inputs[0].tau = static_cast<double>(t - t_n) / cfg_.plan.gop;
        const Image target = data_.ground_truth(m, t);

        ParamSet params = space.trainable_params("a.", false);
        {
            ParamSet fp = field.trainable_params("a.deform.");
            for (auto& arr : fp.arrays()) params.add(arr.name, arr.values, arr.group);
        }
        const StepOutcome out = optimize_step(inputs, data_.views[m], target, params, opt, true,
                                              &space, j, cfg_.plan.iters_pwd);
        maybe_densify(space, opt, "PWD", n, j, cfg_.plan.iters_pwd, densify_rng, j < prune_cutoff);
        log_step("PWD", n, j, out);
    }

    bundle.meta.stage = 1;
    store_.save(key, bundle);
    store_.unload(key);
    log_ << "stage_done stage=PWD n=" << n << " anchors=" << space.anchor_count() << "\n";
    log_.flush();
}

void Trainer::train_ifb(int n) {
    if (ifb_done(n)) return;

    const BundleKey key_a{false, n}, key_b{false, n + 1};
    Bundle a = store_.load(key_a);
    Bundle b = store_.load(key_b);
    if (!a.field || !b.field) throw PreconditionViolation("IFB requires PWD-trained bundles");

    Rng rng = Rng(cfg_.plan.seed, 0).fork(4000 + n);
    OptimizerState opt;

    const FrameRange chunk = window_of(WindowKind::Chunk, n, cfg_.plan);
    for (int j = 0; j < cfg_.plan.iters_ifb; ++j) {
        const int m = static_cast<int>(rng.uniform_index(data_.num_views));
        const int t = chunk.lo + static_cast<int>(rng.uniform_index(chunk.count()));
        const Image target = data_.ground_truth(m, t);
        const IfbStepResult res =
            train_ifb_step(a.space, *a.field, b.space, *b.field, t, cfg_.plan.gop, data_.views[m],
                           target, cfg_.loss, cfg_.blend, cfg_.render_opts, opt, cfg_.lr,
                           /*check_frozen=*/j == 0);
        global_step_ += 1;
        store_.set_clock(global_step_);
        StepOutcome out{res.loss, res.psnr};
        log_step("IFB", n, j, out);
    }

    a.meta.ifb_fw = 1;
    b.meta.ifb_bw = 1;
    store_.save(key_a, a);
    store_.save(key_b, b);
    store_.unload(key_a);
    store_.unload(key_b);
    log_ << "stage_done stage=IFB n=" << n << "\n";
    log_.flush();
}

void Trainer::run() {
    train_gca();
    const int n_keyframes = cfg_.plan.num_keyframes();
    for (int n = 0; n < n_keyframes; ++n) train_kfa(n);
    for (int n = 0; n < n_keyframes; ++n) train_pwd(n);
    for (int n = 0; n + 1 < n_keyframes; ++n) train_ifb(n);
}

void Trainer::train_naive_chunk(int c) {
    const BundleKey key_a{false, c}, key_b{false, c + 1};
    Bundle a = store_.load(key_a);
    Bundle b = store_.load(key_b);
    if (!a.field)
        a.field = make_deformation_field(a.space, cfg_.deform_grid_res, cfg_.deform_channels,
                                         cfg_.deform_hidden, cfg_.plan.seed ^ (0xBADull + c));
    if (!b.field)
        b.field = make_deformation_field(b.space, cfg_.deform_grid_res, cfg_.deform_channels,
                                         cfg_.deform_hidden, cfg_.plan.seed ^ (0xBADull + c + 1));

    Rng rng = Rng(cfg_.plan.seed, 0).fork(5000 + c);
    Rng densify_rng = Rng(cfg_.plan.seed, 0).fork(5500 + c);
    OptimizerState opt;

    const FrameRange chunk = window_of(WindowKind::Chunk, c, cfg_.plan);
    const int t_c = cfg_.plan.keyframe_time(c);
    const int t_c1 = cfg_.plan.keyframe_time(c + 1);

    for (int j = 0; j < cfg_.plan.iters_pwd; ++j) {
        const int m = static_cast<int>(rng.uniform_index(data_.num_views));
        const int t = chunk.lo + static_cast<int>(rng.uniform_index(chunk.count()));
        const double tau_a = static_cast<double>(t - t_c) / cfg_.plan.gop;
        const double tau_b = static_cast<double>(t - t_c1) / cfg_.plan.gop;

        // Fixed linear cross-fade over the chunk.
        std::vector<SpaceInput> inputs{
            {&a.space, &*a.field, tau_a, BlendDirection::None, 1.0 - tau_a, "a."},
            {&b.space, &*b.field, tau_b, BlendDirection::None, tau_a, "b."},
        };

        ParamSet params = a.space.trainable_params("a.", false);
        {
            ParamSet pb = b.space.trainable_params("b.", false);
            for (auto& arr : pb.arrays()) params.add(arr.name, arr.values, arr.group);
            ParamSet fa = a.field->trainable_params("a.deform.");
            for (auto& arr : fa.arrays()) params.add(arr.name, arr.values, arr.group);
            ParamSet fb = b.field->trainable_params("b.deform.");
            for (auto& arr : fb.arrays()) params.add(arr.name, arr.values, arr.group);
        }

        const Image target = data_.ground_truth(m, t);
        FrameForward fwd = forward_frame(inputs, data_.views[m], cfg_.blend, cfg_.render_opts);
        LossResult loss = photometric_loss(fwd.render.image, target, cfg_.loss);
        GradBuffer grads(params);
        const auto render_grads = backward_frame(fwd, loss.d_image, grads);
        identity_regularizer(a.space, *a.field, cfg_.lambda_id, "a.deform.", &grads);
        identity_regularizer(b.space, *b.field, cfg_.lambda_id, "b.deform.", &grads);

        if (cfg_.fhd_enabled) {
            accumulate_stats(a.space, render_grads, fwd.render, fwd.parts[0].gauss_begin,
                             fwd.parts[0].decoded_opacity, j, cfg_.plan.iters_pwd, cfg_.densify);
            accumulate_stats(b.space, render_grads, fwd.render, fwd.parts[1].gauss_begin,
                             fwd.parts[1].decoded_opacity, j, cfg_.plan.iters_pwd, cfg_.densify);
        }
        adam_step(params, grads, opt, cfg_.lr);
        global_step_ += 1;
        store_.set_clock(global_step_);

        if (cfg_.fhd_enabled && j > 0 && j % cfg_.densify.interval == 0) {
            const auto ra = grow_and_prune(a.space, cfg_.densify, densify_rng, true);
            const auto rb = grow_and_prune(b.space, cfg_.densify, densify_rng, true);
            if (ra.grown + ra.pruned + rb.grown + rb.pruned > 0) {
                for (const char* name : {"features", "log_scalings", "offsets"}) {
                    opt.reset_array("a." + std::string(name));
                    opt.reset_array("b." + std::string(name));
                }
            }
            char line[160];
            std::snprintf(line, sizeof(line),
                          "densify stage=NAIVE n=%d step=%lld grown=%d pruned=%d total=%zu\n", c,
                          static_cast<long long>(global_step_), ra.grown + rb.grown,
                          ra.pruned + rb.pruned, a.space.anchor_count() + b.space.anchor_count());
            log_ << line;
        }
    }

    a.meta.stage = 1;
    b.meta.stage = 1;
    store_.save(key_a, a);
    store_.save(key_b, b);
    store_.unload(key_a);
    store_.unload(key_b);
    log_ << "stage_done stage=NAIVE n=" << c << "\n";
    log_.flush();
}

}  // namespace morel
