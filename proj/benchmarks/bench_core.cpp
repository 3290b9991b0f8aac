// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <set>

#include "stylebal/grad.hpp"
#include "stylebal/rng.hpp"
#include "stylebal/stylizer.hpp"
#include "stylebal/textures.hpp"

namespace {

using namespace stylebal;

FeatureMap random_map(std::size_t hw, std::size_t c, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> d(hw * hw * c);
    for (double& v : d) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    return FeatureMap({hw, hw, c}, std::move(d), true);
}

void BM_Gram(benchmark::State& state) {
    const auto hw = static_cast<std::size_t>(state.range(0));
    const auto c = static_cast<std::size_t>(state.range(1));
    const FeatureMap f = random_map(hw, c, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gram(f));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hw * hw * c * c));
}
BENCHMARK(BM_Gram)->Args({16, 32})->Args({32, 64})->Args({64, 8});

void BM_LayerReport(benchmark::State& state) {
    const GramMatrix a = gram(random_map(16, 64, 1)), b = gram(random_map(16, 64, 2));
    for (auto _ : state) benchmark::DoNotOptimize(layer_report("t", a, b, 64.0 * 64.0));
}
BENCHMARK(BM_LayerReport);

void BM_Forward(benchmark::State& state) {
    const auto hw = static_cast<std::size_t>(state.range(0));
    const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
    const Image img = random_image({hw, hw, 3}, 3);
    const auto taps = LossConfig::defaults().style_taps();
    const std::set<std::string> want(taps.begin(), taps.end());
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(img, want));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Backprop(benchmark::State& state) {
    const auto hw = static_cast<std::size_t>(state.range(0));
    const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
    const Image img = random_image({hw, hw, 3}, 3);
    const LossConfig loss = LossConfig::defaults();
    const auto taps = loss.style_taps();
    const std::set<std::string> want(taps.begin(), taps.end());
    const auto target = net.forward(random_image({hw, hw, 3}, 4), want);
    for (auto _ : state) {
        const ForwardCache cache = net.forward_with_cache(img, want);
        std::vector<std::pair<std::string, GradientMap>> grads;
        for (const auto& t : taps) {
            const FeatureMap& f = cache.features.at(t);
            grads.emplace_back(t, classic_style_grad(target.at(t), f, norm_constant(f, loss.normalization)));
        }
        benchmark::DoNotOptimize(backprop_pixels(net, cache, grads));
    }
}
BENCHMARK(BM_Backprop)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_StylizeStep(benchmark::State& state) {
    const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
    const Image c = procedural_texture(64, 64, 1), s = procedural_texture(64, 64, 2);
    OptimizeConfig cfg;
    cfg.steps = 10;
    for (auto _ : state) benchmark::DoNotOptimize(stylize(net, c, s, cfg));
    state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_StylizeStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
