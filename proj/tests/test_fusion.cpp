#include <doctest.h>

#include <cmath>
#include <random>

#include "querysum/fusion.hpp"
#include "querysum/grad_check.hpp"
#include "querysum/model.hpp"
#include "querysum/ops.hpp"
#include "support.hpp"

using namespace querysum;
using testsupport::random_tensor;
using testsupport::random_vec;

TEST_SUITE("attention_fusion") {

TEST_CASE("an open gate passes features through unchanged") {
    std::mt19937_64 rng(3);
    Tensor2 f = random_tensor(3, 6, rng);
    Tensor2 w(6, 6);
    Vec b(6, 50.0); // sigmoid saturates to 1
    Tensor2 out = visual_attention(f, w, b);
    for (size_t i = 0; i < f.size(); ++i) CHECK(out.data[i] == doctest::Approx(f.data[i]).epsilon(1e-12));
}

TEST_CASE("zero feature rows stay zero through the gate") {
    std::mt19937_64 rng(5);
    Tensor2 f(2, 6);
    Tensor2 w = random_tensor(6, 6, rng);
    Vec b = random_vec(6, rng);
    Tensor2 out = visual_attention(f, w, b);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("visual attention gradients pass finite differences at (4, 512)") {
    std::mt19937_64 rng(7);
    Tensor2 f = random_tensor(4, 512, rng);
    Tensor2 w = random_tensor(512, 512, rng, 0.05);
    Vec b = random_vec(512, rng, 0.05);
    const Tensor2 loss_weights = random_tensor(4, 512, rng);

    auto loss = [&] {
        Tensor2 out = visual_attention(f, w, b);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) acc += loss_weights.data[i] * out.data[i];
        return acc;
    };
    Tensor2 gate;
    visual_attention(f, w, b, &gate);
    VisualAttentionGrads analytic = visual_attention_backward(f, w, gate, loss_weights);

    std::vector<ParamView> params{{"w", std::span<double>(w.data)}, {"b", std::span<double>(b)}};
    std::vector<ParamView> grads{{"w", std::span<double>(analytic.w.data)}, {"b", std::span<double>(analytic.b)}};
    // deterministic subsample per block keeps the 512-wide sweep cheap
    GradCheckReport report = grad_check(loss, params, grads, 1e-5, 200, 99);
    CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("one segment broadcasts identical rows to all frames") {
    std::mt19937_64 rng(11);
    Tensor2 seg = random_tensor(1, 4, rng);
    Tensor2 out = broadcast_segments(seg, {{0, 3}}, 3);
    REQUIRE(out.rows == 3);
    for (int f = 0; f < 3; ++f) {
        for (int c = 0; c < 4; ++c) CHECK(out.at(f, c) == seg.at(0, c));
    }
}

TEST_CASE("two segments split their frames as declared") {
    std::mt19937_64 rng(13);
    Tensor2 seg = random_tensor(2, 4, rng);
    Tensor2 out = broadcast_segments(seg, {{0, 2}, {2, 4}}, 4);
    for (int f = 0; f < 4; ++f) {
        const int s = f < 2 ? 0 : 1;
        for (int c = 0; c < 4; ++c) CHECK(out.at(f, c) == seg.at(s, c));
    }
}

TEST_CASE("broadcast matches an interval-lookup oracle on random boundaries") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int frames = 4 + static_cast<int>(rng() % 40);
        SegmentBoundaries bounds;
        int start = 0;
        while (start < frames) {
            const int len = 1 + static_cast<int>(rng() % 5);
            bounds.push_back({start, std::min(start + len, frames)});
            start += len;
        }
        Tensor2 seg = random_tensor(static_cast<int>(bounds.size()), 3, rng);
        Tensor2 out = broadcast_segments(seg, bounds, frames);
        for (int f = 0; f < frames; ++f) {
            // linear-scan interval matcher
            int owner = -1;
            for (size_t s = 0; s < bounds.size(); ++s) {
                if (bounds[s].start <= f && f < bounds[s].end) owner = static_cast<int>(s);
            }
            REQUIRE(owner >= 0);
            for (int c = 0; c < 3; ++c) CHECK(out.at(f, c) == seg.at(owner, c));
        }
    }
}

TEST_CASE("broadcast rejects coverage gaps") {
    Tensor2 seg(2, 3);
    CHECK_THROWS_AS(broadcast_segments(seg, {{0, 2}, {3, 4}}, 4), std::invalid_argument);
    CHECK_THROWS_AS(broadcast_segments(seg, {{0, 2}, {2, 3}}, 4), std::invalid_argument);
}

TEST_CASE("ones query and an open gate reduce mutual attention to the visual product") {
    std::mt19937_64 rng(19);
    FusionParams p;
    p.mutual_w = Tensor2(6, 6);
    p.mutual_b.assign(6, 50.0);
    Vec z_ta(6, 1.0);
    Tensor2 z_as = random_tensor(3, 6, rng);
    Tensor2 z_ast = random_tensor(3, 6, rng);
    Tensor2 out = mutual_attention(z_ta, z_as, z_ast, p, true);
    for (int f = 0; f < 3; ++f) {
        for (int c = 0; c < 6; ++c) {
            CHECK(out.at(f, c) == doctest::Approx(z_as.at(f, c) * z_ast.at(f, c)).epsilon(1e-10));
        }
    }
}

TEST_CASE("a zero factor annihilates the fused features") {
    std::mt19937_64 rng(23);
    FusionParams p;
    p.mutual_w = random_tensor(6, 6, rng);
    p.mutual_b = random_vec(6, rng);
    Vec z_ta(6, 0.0);
    Tensor2 z_as = random_tensor(3, 6, rng);
    Tensor2 z_ast = random_tensor(3, 6, rng);
    Tensor2 out = mutual_attention(z_ta, z_as, z_ast, p, true);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("mutual attention matches a scalar-loop recomputation") {
    std::mt19937_64 rng(29);
    FusionParams p;
    p.mutual_w = random_tensor(5, 5, rng);
    p.mutual_b = random_vec(5, rng);
    Vec z_ta = random_vec(5, rng);
    Tensor2 z_as = random_tensor(3, 5, rng);
    Tensor2 z_ast = random_tensor(3, 5, rng);
    Tensor2 out = mutual_attention(z_ta, z_as, z_ast, p, true);
    for (int f = 0; f < 3; ++f) {
        for (int c = 0; c < 5; ++c) {
            const double h = z_ta[c] * z_as.at(f, c) * z_ast.at(f, c);
            double pre = p.mutual_b[c];
            for (int i = 0; i < 5; ++i) {
                pre += p.mutual_w.at(c, i) * z_ta[i] * z_as.at(f, i) * z_ast.at(f, i);
            }
            const double expected = h / (1.0 + std::exp(-pre));
            CHECK(std::abs(out.at(f, c) - expected) < 1e-12);
        }
    }
}

TEST_CASE("permuting the three Hadamard factors is bit-identical") {
    std::mt19937_64 rng(31);
    FusionParams p;
    p.mutual_w = random_tensor(4, 4, rng);
    p.mutual_b = random_vec(4, rng);
    for (int trial = 0; trial < 100; ++trial) {
        Vec z_ta = random_vec(4, rng);
        Tensor2 a = random_tensor(2, 4, rng);
        Tensor2 b = random_tensor(2, 4, rng);

        Tensor2 out_ab = mutual_attention(z_ta, a, b, p, true);
        Tensor2 out_ba = mutual_attention(z_ta, b, a, p, true);
        for (size_t i = 0; i < out_ab.size(); ++i) REQUIRE(out_ab.data[i] == out_ba.data[i]);
    }
}

TEST_CASE("a zero-weight head predicts the uniform distribution") {
    FusionParams p;
    p.head_w = Tensor2(5, 6);
    p.head_b.assign(5, 0.0);
    std::mt19937_64 rng(37);
    Tensor2 z_ma = random_tensor(3, 6, rng);
    Tensor2 probs = softmax_rows(classify_frames(z_ma, p));
    for (double v : probs.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("head logits take their width from the class count") {
    FusionParams p;
    p.head_w = Tensor2(5, 8);
    p.head_b.assign(5, 0.0);
    Tensor2 z_ma(2, 8);
    CHECK(classify_frames(z_ma, p).cols == 5);
}

TEST_CASE("head gradients match finite differences") {
    std::mt19937_64 rng(41);
    FusionParams p;
    p.head_w = random_tensor(4, 6, rng);
    p.head_b = random_vec(4, rng);
    Tensor2 z_ma = random_tensor(3, 6, rng);
    const Tensor2 loss_weights = random_tensor(3, 4, rng);

    auto loss = [&] {
        Tensor2 logits = classify_frames(z_ma, p);
        double acc = 0.0;
        for (size_t i = 0; i < logits.size(); ++i) acc += loss_weights.data[i] * logits.data[i];
        return acc;
    };
    LinearGrads analytic = linear_backward(p.head_w, z_ma, loss_weights);
    std::vector<ParamView> params{{"w", std::span<double>(p.head_w.data)}, {"b", std::span<double>(p.head_b)}};
    std::vector<ParamView> grads{{"w", std::span<double>(analytic.w.data)}, {"b", std::span<double>(analytic.b)}};
    CHECK(grad_check(loss, params, grads).max_rel_err < 1e-6);
}

TEST_CASE("pooling identical rows reproduces them") {
    Tensor2 logits(3, 4);
    for (int f = 0; f < 3; ++f) {
        for (int c = 0; c < 4; ++c) logits.at(f, c) = 1.5 * c;
    }
    Tensor2 pooled = pool_segment_logits(logits, {{0, 3}});
    REQUIRE(pooled.rows == 1);
    for (int c = 0; c < 4; ++c) CHECK(pooled.at(0, c) == 1.5 * c);
}

TEST_CASE("pooling two rows takes their midpoint") {
    std::mt19937_64 rng(43);
    Tensor2 logits = random_tensor(2, 4, rng);
    Tensor2 pooled = pool_segment_logits(logits, {{0, 2}});
    for (int c = 0; c < 4; ++c) {
        CHECK(pooled.at(0, c) == doctest::Approx((logits.at(0, c) + logits.at(1, c)) / 2).epsilon(1e-15));
    }
}

TEST_CASE("pooling matches an index-grouped mean oracle") {
    std::mt19937_64 rng(47);
    const int frames = 23;
    SegmentBoundaries bounds{{0, 5}, {5, 6}, {6, 14}, {14, 23}};
    Tensor2 logits = random_tensor(frames, 3, rng);
    Tensor2 pooled = pool_segment_logits(logits, bounds);
    for (size_t s = 0; s < bounds.size(); ++s) {
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int f = bounds[s].start; f < bounds[s].end; ++f) sum += logits.at(f, c);
            CHECK(pooled.at(static_cast<int>(s), c) == doctest::Approx(sum / bounds[s].length()).epsilon(1e-15));
        }
    }
}

TEST_CASE("changing one frame's features only moves its own logits row") {
    ModelConfig mc;
    mc.vocab_size = 10;
    mc.embed_dim = 5;
    mc.feature_dim = 8;
    mc.max_tokens = 8;
    mc.num_classes = 3;
    ModelParams model = ModelParams::init(mc, 51);

    std::mt19937_64 rng(53);
    VideoBatch batch;
    batch.tokens = {1, 2};
    batch.frame_features = random_tensor(6, 8, rng);
    batch.segment_features = random_tensor(2, 8, rng);
    batch.lifted_boundaries = {{0, 3}, {3, 6}};

    Tensor2 base = model_forward(model, batch);
    batch.frame_features.at(4, 2) += 0.75;
    Tensor2 changed = model_forward(model, batch);
    for (int f = 0; f < 6; ++f) {
        for (int c = 0; c < 3; ++c) {
            if (f == 4) continue;
            CHECK(base.at(f, c) == changed.at(f, c));
        }
    }
    bool row_moved = false;
    for (int c = 0; c < 3; ++c) row_moved |= base.at(4, c) != changed.at(4, c);
    CHECK(row_moved);
}

TEST_CASE("end-to-end loss gradients clear 1e-4 on every fusion block") {
    ModelConfig mc;
    mc.vocab_size = 10;
    mc.embed_dim = 5;
    mc.feature_dim = 8;
    mc.max_tokens = 8;
    mc.num_classes = 3;
    ModelParams model = ModelParams::init(mc, 61);

    std::mt19937_64 rng(67);
    VideoBatch batch;
    batch.video_id = "t";
    batch.tokens = {3, 1, 7};
    batch.frame_features = random_tensor(6, 8, rng);
    batch.segment_features = random_tensor(2, 8, rng);
    batch.lifted_boundaries = {{0, 3}, {3, 6}};
    batch.frame_labels = {1, 2, 3, 1, 2, 3};
    batch.segment_labels = {2, 3};

    for (Phase phase : {Phase::finetune, Phase::pretrain}) {
        ModelParams grads = ModelParams::zeros(mc);
        model_loss(model, batch, phase, &grads);
        auto loss = [&] { return model_loss(model, batch, phase, nullptr); };
        std::vector<ParamView> params = model.param_views();
        std::vector<ParamView> analytic = grads.param_views();
        std::erase_if(params, [](const ParamView& v) { return !v.name.starts_with("fusion."); });
        std::erase_if(analytic, [](const ParamView& v) { return !v.name.starts_with("fusion."); });
        GradCheckReport report = grad_check(loss, params, analytic);
        INFO("phase ", phase == Phase::pretrain ? "pretrain" : "finetune", ", worst block: ", report.worst_block);
        CHECK(report.max_rel_err < 1e-4);
    }
}

} // TEST_SUITE
