#include <benchmark/benchmark.h>

#include "morel/loss.hpp"
#include "morel/model_forward.hpp"

using namespace morel;

namespace {

std::vector<GaussianAttributes> random_gaussians(int count, uint64_t seed) {
    Rng rng(seed, 0);
    std::vector<GaussianAttributes> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        GaussianAttributes g;
        g.center = {rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)};
        const double s = rng.uniform(0.2, 0.5);
        g.cov = Sym2{s * s, 0.0, s * s};
        g.color = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        g.opacity = rng.uniform(0.3, 0.95);
        g.depth_key = rng.uniform(0.0, 1.0);
        out.push_back(g);
    }
    return out;
}

ViewTransform bench_view() {
    ViewTransform view;
    view.linear = Mat2{12.8, 0.0, 0.0, 12.8};
    view.width = 128;
    view.height = 128;
    return view;
}

}  // namespace

static void BM_RenderForward(benchmark::State& state) {
    const auto gaussians = random_gaussians(static_cast<int>(state.range(0)), 7);
    const ViewTransform view = bench_view();
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(gaussians, view));
    }
}
BENCHMARK(BM_RenderForward)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_RenderBackward(benchmark::State& state) {
    const auto gaussians = random_gaussians(static_cast<int>(state.range(0)), 7);
    const ViewTransform view = bench_view();
    const RenderTape tape = render_forward(gaussians, view);
    Image upstream(view.width, view.height, 1e-3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_backward(tape, upstream));
    }
}
BENCHMARK(BM_RenderBackward)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_TrainingStep(benchmark::State& state) {
    Rng rng(3, 1);
    std::vector<Vec2> points;
    for (int i = 0; i < state.range(0); ++i)
        points.push_back({rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)});
    AnchorSpace space = init_anchor_space(points, 0.4, 3);
    std::fill(space.levels.begin(), space.levels.end(), 0);
    space.bbox_min = {0, 0};
    space.bbox_max = {10, 10};
    DeformationField field = make_deformation_field(space, 16, 8, 32, 5);

    const ViewTransform view = bench_view();
    Image target(view.width, view.height, 0.4);
    std::vector<SpaceInput> inputs{{&space, &field, 0.5, BlendDirection::None, 1.0, "a."}};

    ParamSet params = space.trainable_params("a.", false);
    {
        ParamSet fp = field.trainable_params("a.deform.");
        for (auto& arr : fp.arrays()) params.add(arr.name, arr.values, arr.group);
    }

    RenderOptions render_opts;
    render_opts.cull_sigma = 3.0;  // the training default
    for (auto _ : state) {
        FrameForward fwd = forward_frame(inputs, view, BlendConfig{}, render_opts);
        LossResult loss = photometric_loss(fwd.render.image, target, LossConfig{});
        GradBuffer grads(params);
        backward_frame(fwd, loss.d_image, grads);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_TrainingStep)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);
