#include <benchmark/benchmark.h>

#include <vector>

#include "sitqc/audio.hpp"
#include "sitqc/features.hpp"
#include "sitqc/iforest.hpp"
#include "sitqc/ocsvm.hpp"
#include "sitqc/resample.hpp"
#include "sitqc/rng.hpp"
#include "sitqc/scoring.hpp"
#include "sitqc/synth.hpp"

using namespace sitqc;

namespace {

MonoClip thirty_second_capture() {
    WingbeatSpec spec;
    spec.seed = 11;
    return to_mono(generate_clip(spec));
}

FeatureMatrix training_matrix(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m;
    m.dim = 512;
    for (std::size_t i = 0; i < rows; ++i) {
        FeatureVector v;
        v.clip_id = "c" + std::to_string(i / 6);
        v.chunk_index = i % 6;
        for (int d = 0; d < 512; ++d) v.values.push_back(rng.uniform(0.0, 4.0));
        m.rows.push_back(std::move(v));
    }
    return m;
}

void BM_Resample44kTo4k(benchmark::State& state) {
    const MonoClip clip = thirty_second_capture();
    for (auto _ : state) {
        MonoClip out = resample(clip, 4000);
        benchmark::DoNotOptimize(out.samples.data());
    }
}
BENCHMARK(BM_Resample44kTo4k)->Unit(benchmark::kMillisecond);

void BM_SpectralEmbedding(benchmark::State& state) {
    Chunk chunk;
    chunk.samples.assign(16000, 0.0);
    Rng rng(5);
    for (auto& v : chunk.samples) v = rng.uniform(-0.5, 0.5);
    const SpectralEmbedConfig cfg;
    for (auto _ : state) {
        FeatureVector v = extract_spectral_embedding(chunk, 4000, cfg, "b");
        benchmark::DoNotOptimize(v.values.data());
    }
}
BENCHMARK(BM_SpectralEmbedding)->Unit(benchmark::kMillisecond);

void BM_IforestFit(benchmark::State& state) {
    const FeatureMatrix m = training_matrix(static_cast<std::size_t>(state.range(0)), 3);
    IforestParams params;
    for (auto _ : state) {
        IsolationForest f = fit_iforest(m, params);
        benchmark::DoNotOptimize(f.trees.data());
    }
}
BENCHMARK(BM_IforestFit)->Arg(96)->Arg(384)->Unit(benchmark::kMillisecond);

void BM_IforestScore(benchmark::State& state) {
    const FeatureMatrix m = training_matrix(96, 3);
    const IsolationForest f = fit_iforest(m, IforestParams{});
    Rng rng(9);
    std::vector<double> q(512);
    for (auto& v : q) v = rng.uniform(0.0, 4.0);
    for (auto _ : state) benchmark::DoNotOptimize(f.score(q));
}
BENCHMARK(BM_IforestScore);

void BM_OcsvmFit(benchmark::State& state) {
    const FeatureMatrix m = training_matrix(static_cast<std::size_t>(state.range(0)), 7);
    OcsvmParams params;
    for (auto _ : state) {
        OcsvmModel model = fit_ocsvm(m, params);
        benchmark::DoNotOptimize(model.alpha.data());
    }
}
BENCHMARK(BM_OcsvmFit)->Arg(96)->Arg(384)->Unit(benchmark::kMillisecond);

void BM_GenerateClip(benchmark::State& state) {
    WingbeatSpec spec;
    spec.seed = 1;
    for (auto _ : state) {
        AudioClip clip = generate_clip(spec);
        benchmark::DoNotOptimize(clip.channels.data());
    }
}
BENCHMARK(BM_GenerateClip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
