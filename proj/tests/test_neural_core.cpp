#include <doctest.h>

#include <cmath>
#include <random>

#include "querysum/adam.hpp"
#include "querysum/grad_check.hpp"
#include "querysum/ops.hpp"
#include "support.hpp"

using namespace querysum;
using testsupport::random_tensor;
using testsupport::random_vec;

TEST_SUITE("neural_core") {

TEST_CASE("linear with identity weights is a pass-through") {
    Tensor2 w(3, 3);
    for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
    Vec b(3, 0.0);
    std::mt19937_64 rng(7);
    Tensor2 x = random_tensor(4, 3, rng);
    Tensor2 out = linear(w, b, x);
    for (size_t i = 0; i < x.size(); ++i) CHECK(out.data[i] == x.data[i]);
}

TEST_CASE("linear on a one-hot row selects a weight column") {
    std::mt19937_64 rng(11);
    Tensor2 w = random_tensor(5, 4, rng);
    Vec b(5, 0.0);
    Tensor2 x(1, 4);
    x.at(0, 2) = 1.0;
    Tensor2 out = linear(w, b, x);
    for (int o = 0; o < 5; ++o) CHECK(out.at(0, o) == w.at(o, 2));
}

TEST_CASE("linear rejects mismatched inner dimensions") {
    Tensor2 w(2, 3);
    Vec b(2, 0.0);
    Tensor2 x(4, 5);
    CHECK_THROWS_AS(linear(w, b, x), std::invalid_argument);
}

TEST_CASE("linear gradients match central differences on a random 3x4 case") {
    std::mt19937_64 rng(23);
    Tensor2 w = random_tensor(3, 4, rng);
    Vec b = random_vec(3, rng);
    Tensor2 x = random_tensor(3, 4, rng);
    const Tensor2 loss_weights = random_tensor(3, 3, rng);

    auto loss = [&] {
        Tensor2 out = linear(w, b, x);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) acc += loss_weights.data[i] * out.data[i];
        return acc;
    };
    LinearGrads analytic = linear_backward(w, x, loss_weights);

    std::vector<ParamView> params{{"w", std::span<double>(w.data)},
                                  {"b", std::span<double>(b)},
                                  {"x", std::span<double>(x.data)}};
    std::vector<ParamView> grads{{"w", std::span<double>(analytic.w.data)},
                                 {"b", std::span<double>(analytic.b)},
                                 {"x", std::span<double>(analytic.x.data)}};
    GradCheckReport report = grad_check(loss, params, grads);
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("softmax of equal values is uniform") {
    Tensor2 x(1, 4);
    x.fill(3.25);
    Tensor2 s = softmax_rows(x);
    for (int c = 0; c < 4; ++c) CHECK(s.at(0, c) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax saturates under an additive mask") {
    Tensor2 x(1, 2);
    x.at(0, 0) = 0.0;
    x.at(0, 1) = kAttentionMask;
    Tensor2 s = softmax_rows(x);
    CHECK(s.at(0, 0) == 1.0);
    CHECK(s.at(0, 1) == 0.0);
}

TEST_CASE("softmax matches an extended-precision oracle") {
    std::mt19937_64 rng(31);
    Tensor2 x = random_tensor(1, 9, rng, 4.0);
    Tensor2 s = softmax_rows(x);
    long double sum = 0.0L;
    std::vector<long double> e(9);
    for (int c = 0; c < 9; ++c) {
        e[c] = std::exp(static_cast<long double>(x.at(0, c)));
        sum += e[c];
    }
    for (int c = 0; c < 9; ++c) {
        CHECK(std::abs(s.at(0, c) - static_cast<double>(e[c] / sum)) < 1e-12);
    }
}

TEST_CASE("softmax rows sum to one on random tensors") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor2 x = random_tensor(1 + static_cast<int>(rng() % 6), 2 + static_cast<int>(rng() % 12), rng, 30.0);
        Tensor2 s = softmax_rows(x);
        for (int r = 0; r < s.rows; ++r) {
            double sum = 0.0;
            for (int c = 0; c < s.cols; ++c) {
                sum += s.at(r, c);
                CHECK(s.at(r, c) >= 0.0);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("layer norm sends constant vectors to the bias") {
    Vec x(6, 4.2);
    Vec gain(6, 1.0);
    Vec bias(6, 0.0);
    Vec out = layer_norm(x, gain, bias);
    for (double v : out) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("layer norm of [1,-1] is [1,-1] up to eps") {
    Vec out = layer_norm({1.0, -1.0}, {1.0, 1.0}, {0.0, 0.0});
    const double expected = 1.0 / std::sqrt(1.0 + kLayerNormEps); // hand computation: mean 0, var 1
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(-expected).epsilon(1e-12));
}

TEST_CASE("layer norm output mean equals the bias mean for constant gain") {
    std::mt19937_64 rng(41);
    Vec x = random_vec(8, rng, 5.0);
    Vec gain(8, 1.7);
    Vec bias = random_vec(8, rng);
    Vec out = layer_norm(x, gain, bias);
    double out_mean = 0.0;
    double bias_mean = 0.0;
    for (int i = 0; i < 8; ++i) {
        out_mean += out[i];
        bias_mean += bias[i];
    }
    CHECK(out_mean / 8 == doctest::Approx(bias_mean / 8).epsilon(1e-9));
}

TEST_CASE("layer norm rejects length < 2") {
    CHECK_THROWS_AS(layer_norm({1.0}, {1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("cross entropy of a point mass is zero") {
    Tensor2 logits(1, 3);
    logits.at(0, 1) = 200.0; // p(class 2) == 1 numerically
    CrossEntropy ce = cross_entropy(logits, {2});
    CHECK(ce.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross entropy of uniform logits is ln C") {
    Tensor2 logits(1, 5);
    CrossEntropy ce = cross_entropy(logits, {3});
    CHECK(ce.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("batch cross entropy is the mean of per-row losses") {
    std::mt19937_64 rng(43);
    Tensor2 logits = random_tensor(2, 4, rng, 3.0);
    CrossEntropy batch = cross_entropy(logits, {1, 4});
    Tensor2 row0(1, 4), row1(1, 4);
    std::copy(logits.row(0), logits.row(0) + 4, row0.data.begin());
    std::copy(logits.row(1), logits.row(1) + 4, row1.data.begin());
    const double single = (cross_entropy(row0, {1}).loss + cross_entropy(row1, {4}).loss) / 2.0;
    CHECK(batch.loss == doctest::Approx(single).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Tensor2 logits(1, 3);
    CHECK_THROWS_AS(cross_entropy(logits, {0}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(logits, {4}), std::invalid_argument);
}

TEST_CASE("cross entropy is non-negative on random inputs") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 2 + static_cast<int>(rng() % 8);
        Tensor2 logits = random_tensor(3, c, rng, 10.0);
        std::vector<int> labels{1 + static_cast<int>(rng() % c), 1 + static_cast<int>(rng() % c),
                                1 + static_cast<int>(rng() % c)};
        CHECK(cross_entropy(logits, labels).loss >= 0.0);
    }
}

TEST_CASE("softmax + cross entropy gradient matches central differences") {
    std::mt19937_64 rng(53);
    Tensor2 logits = random_tensor(2, 5, rng, 2.0);
    std::vector<int> labels{2, 5};
    CrossEntropy ce = cross_entropy(logits, labels);
    auto loss = [&] { return cross_entropy(logits, labels).loss; };
    std::vector<ParamView> params{{"logits", std::span<double>(logits.data)}};
    std::vector<ParamView> grads{{"logits", std::span<double>(ce.grad_logits.data)}};
    GradCheckReport report = grad_check(loss, params, grads);
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("layer norm gradient check stays under 1e-5") {
    std::mt19937_64 rng(59);
    Tensor2 x = random_tensor(3, 6, rng, 2.0);
    Vec gain = random_vec(6, rng);
    Vec bias = random_vec(6, rng);
    const Tensor2 loss_weights = random_tensor(3, 6, rng);

    auto loss = [&] {
        Tensor2 out = layer_norm_rows(x, gain, bias);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) acc += loss_weights.data[i] * out.data[i];
        return acc;
    };
    LayerNormCache cache;
    layer_norm_rows(x, gain, bias, &cache);
    LayerNormGrads analytic = layer_norm_rows_backward(cache, gain, loss_weights);

    std::vector<ParamView> params{{"x", std::span<double>(x.data)},
                                  {"gain", std::span<double>(gain)},
                                  {"bias", std::span<double>(bias)}};
    std::vector<ParamView> grads{{"x", std::span<double>(analytic.x.data)},
                                 {"gain", std::span<double>(analytic.gain)},
                                 {"bias", std::span<double>(analytic.bias)}};
    GradCheckReport report = grad_check(loss, params, grads);
    CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("adam leaves parameters unchanged for zero gradients") {
    Vec p{1.0, -2.0, 3.5};
    Vec g(3, 0.0);
    std::vector<ParamView> params{{"p", std::span<double>(p)}};
    std::vector<ParamView> grads{{"g", std::span<double>(g)}};
    AdamState state = AdamState::for_params(params);
    adam_step({0.01, 0.9, 0.999, 1e-8}, state, params, grads);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -2.0);
    CHECK(p[2] == 3.5);
    CHECK(state.t == 1);
}

TEST_CASE("first adam step moves by about lr in the gradient sign direction") {
    // at t=1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
    Vec p{0.0};
    Vec g{-3.7};
    std::vector<ParamView> params{{"p", std::span<double>(p)}};
    std::vector<ParamView> grads{{"g", std::span<double>(g)}};
    AdamState state = AdamState::for_params(params);
    const double lr = 0.05;
    adam_step({lr, 0.9, 0.999, 1e-8}, state, params, grads);
    CHECK(p[0] == doctest::Approx(lr).epsilon(1e-7)); // sign(g) = -1, p -= lr * (-1)
}

TEST_CASE("adam defaults carry the published hyperparameters") {
    AdamConfig config;
    CHECK(config.lr == 1e-7);
    CHECK(config.beta1 == 0.9);
    CHECK(config.beta2 == 0.999);
    CHECK(config.epsilon == 1e-8);
}

TEST_CASE("adam updates are bit-deterministic") {
    auto run = [] {
        std::mt19937_64 rng(61);
        Vec p = random_vec(32, rng);
        Vec g = random_vec(32, rng);
        std::vector<ParamView> params{{"p", std::span<double>(p)}};
        std::vector<ParamView> grads{{"g", std::span<double>(g)}};
        AdamState state = AdamState::for_params(params);
        for (int i = 0; i < 5; ++i) adam_step({1e-3, 0.9, 0.999, 1e-8}, state, params, grads);
        return p;
    };
    Vec a = run();
    Vec b = run();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam rejects shape mismatches") {
    Vec p{1.0, 2.0};
    Vec g{1.0};
    std::vector<ParamView> params{{"p", std::span<double>(p)}};
    std::vector<ParamView> grads{{"g", std::span<double>(g)}};
    AdamState state = AdamState::for_params(params);
    CHECK_THROWS_AS(adam_step({}, state, params, grads), std::invalid_argument);
}

} // TEST_SUITE
