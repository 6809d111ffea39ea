#include <benchmark/benchmark.h>

#include "morel/flow.hpp"
#include "morel/ssim.hpp"

using namespace morel;

namespace {

Image blobs(int size, uint64_t seed, double shift) {
    Rng rng(seed, 2);
    std::vector<Vec2> centers;
    for (int i = 0; i < 30; ++i) centers.push_back({rng.uniform(0.0, size), rng.uniform(0.0, size)});
    Image img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = 0.0;
            for (const auto& c : centers) {
                const double dx = x - shift - c.x, dy = y - c.y;
                v += std::exp(-(dx * dx + dy * dy) / 24.0);
            }
            const double p = std::min(1.0, v);
            img.set_pixel(x, y, {p, p, p});
        }
    return img;
}

}  // namespace

static void BM_FlowLk(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Image a = blobs(size, 11, 0.0);
    const Image b = blobs(size, 11, 1.3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(flow_lk(a, b));
    }
}
BENCHMARK(BM_FlowLk)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_SsimForward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Image a = blobs(size, 13, 0.0);
    const Image b = blobs(size, 13, 0.8);
    const auto la = a.luminance();
    const auto lb = b.luminance();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim_forward(la, lb, size, size));
    }
}
BENCHMARK(BM_SsimForward)->Arg(128)->Unit(benchmark::kMillisecond);
