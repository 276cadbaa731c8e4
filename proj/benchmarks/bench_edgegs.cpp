#include "edgegs/extract.hpp"
#include "edgegs/losses.hpp"
#include "edgegs/metrics.hpp"
#include "edgegs/renderer.hpp"
#include "edgegs/synth.hpp"
#include "edgegs/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace edgegs;

namespace {

const SyntheticScene& cube_scene() {
    static const SyntheticScene scene = [] {
        SceneOptions opt;
        opt.views = 4;
        return make_synthetic_scene(opt);
    }();
    return scene;
}

GaussianCloud cloud_of(std::size_t n) {
    return init_cloud(RandomInit{n, Vec3::Constant(-0.5), Vec3::Constant(0.5)}, 1);
}

// Points on the 12 cube edges with a little noise.
std::vector<OrientedPoint> cube_points(std::size_t per_edge) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 0.002);
    std::vector<OrientedPoint> pts;
    for (const auto& e : make_scene(SceneKind::Cube, 0)) {
        const auto& l = std::get<LineSegment>(e);
        const Vec3 d = (l.p1 - l.p0).normalized();
        for (std::size_t i = 0; i < per_edge; ++i) {
            const double t = (i + 0.5) / static_cast<double>(per_edge);
            pts.push_back({l.p0 + t * (l.p1 - l.p0) + Vec3(noise(rng), noise(rng), noise(rng)), d});
        }
    }
    return pts;
}

} // namespace

static void BM_RenderForward(benchmark::State& state) {
    const auto cloud = cloud_of(static_cast<std::size_t>(state.range(0)));
    const CameraView& cam = cube_scene().cameras[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(cloud, cam));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderForward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_RenderBackward(benchmark::State& state) {
    const auto cloud = cloud_of(static_cast<std::size_t>(state.range(0)));
    const CameraView& cam = cube_scene().cameras[0];
    const RenderOutput out = render(cloud, cam);
    const PixelMask mask = build_mask(cam.target, 0.1, 0);
    const GrayImage upstream = masked_l1_gradient(out.image, cam.target, mask);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_backward(cloud, cam, out, upstream));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RenderBackward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Knn(benchmark::State& state) {
    std::vector<Vec3> means;
    for (const auto& g : cloud_of(static_cast<std::size_t>(state.range(0)))) {
        means.push_back(g.mean);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(knn(means, 4));
    }
}
BENCHMARK(BM_Knn)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

static void BM_Extract(benchmark::State& state) {
    const auto pts = cube_points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_from_points(pts, {}));
    }
}
BENCHMARK(BM_Extract)->Arg(100)->Arg(1500)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
    const auto gt = make_scene(SceneKind::Mixed, 0);
    auto pred = gt;
    pred.pop_back();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate(pred, gt));
    }
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
