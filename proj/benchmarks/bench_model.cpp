#include <benchmark/benchmark.h>

#include <random>

#include "querysum/evaluate.hpp"
#include "querysum/model.hpp"
#include "querysum/ops.hpp"
#include "querysum/pseudo_label.hpp"

using namespace querysum;

namespace {

ModelConfig bench_config(int feature_dim) {
    ModelConfig mc;
    mc.vocab_size = 64;
    mc.embed_dim = 32;
    mc.feature_dim = feature_dim;
    mc.max_tokens = 16;
    mc.num_classes = 5;
    return mc;
}

VideoBatch bench_batch(const ModelConfig& mc, int frames, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VideoBatch batch;
    batch.video_id = "bench";
    batch.tokens = {3, 9, 14, 27};
    batch.frame_features = Tensor2(frames, mc.feature_dim);
    for (double& v : batch.frame_features.data) v = dist(rng);
    const SegmentBoundaries bounds = segment_boundaries(frames, 2);
    batch.segment_features = Tensor2(static_cast<int>(bounds.size()), mc.feature_dim);
    for (double& v : batch.segment_features.data) v = dist(rng);
    batch.lifted_boundaries = bounds;
    batch.frame_labels.resize(frames);
    for (int f = 0; f < frames; ++f) batch.frame_labels[f] = 1 + f % mc.num_classes;
    batch.segment_labels.resize(bounds.size());
    for (size_t s = 0; s < bounds.size(); ++s) batch.segment_labels[s] = 1 + static_cast<int>(s) % mc.num_classes;
    return batch;
}

} // namespace

static void BM_BoosterEncode(benchmark::State& state) {
    const ModelConfig mc = bench_config(static_cast<int>(state.range(0)));
    ModelParams model = ModelParams::init(mc, 1);
    const std::vector<int> tokens{3, 9, 14, 27, 31, 8};
    for (auto _ : state) {
        BoosterEncoding enc = booster_encode(tokens, model.booster, mc.booster_config());
        benchmark::DoNotOptimize(enc.z_ta.data());
    }
}
BENCHMARK(BM_BoosterEncode)->Arg(128)->Arg(512);

static void BM_ModelForward(benchmark::State& state) {
    const ModelConfig mc = bench_config(static_cast<int>(state.range(0)));
    ModelParams model = ModelParams::init(mc, 2);
    const VideoBatch batch = bench_batch(mc, 64, 3);
    for (auto _ : state) {
        Tensor2 logits = model_forward(model, batch);
        benchmark::DoNotOptimize(logits.data.data());
    }
}
BENCHMARK(BM_ModelForward)->Arg(128)->Arg(512);

static void BM_ModelLossBackward(benchmark::State& state) {
    const ModelConfig mc = bench_config(static_cast<int>(state.range(0)));
    ModelParams model = ModelParams::init(mc, 4);
    const VideoBatch batch = bench_batch(mc, 64, 5);
    ModelParams grads = ModelParams::zeros(mc);
    for (auto _ : state) {
        for (ParamView& v : grads.param_views()) std::fill(v.values.begin(), v.values.end(), 0.0);
        benchmark::DoNotOptimize(model_loss(model, batch, Phase::finetune, &grads));
    }
}
BENCHMARK(BM_ModelLossBackward)->Arg(128)->Arg(512);

static void BM_PseudoLabels(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::vector<double> scores(static_cast<size_t>(state.range(0)));
    for (double& s : scores) s = 1 + static_cast<double>(rng() % 5);
    for (auto _ : state) {
        SegmentPseudoLabels labels = generate_pseudo_labels(scores, 30, 5, ScoreKind::integer_categories);
        benchmark::DoNotOptimize(labels.data());
    }
}
BENCHMARK(BM_PseudoLabels)->Arg(647)->Arg(10000);

static void BM_FBeta(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const size_t n = static_cast<size_t>(state.range(0));
    std::vector<uint8_t> pred(n);
    for (auto& v : pred) v = rng() % 2;
    std::vector<std::vector<uint8_t>> gts(20, std::vector<uint8_t>(n));
    for (auto& gt : gts) {
        for (auto& v : gt) v = rng() % 2;
    }
    for (auto _ : state) benchmark::DoNotOptimize(f_beta(pred, gts, 1.0));
}
BENCHMARK(BM_FBeta)->Arg(647);

BENCHMARK_MAIN();
