#pragma once

#include "querysum/tensor.hpp"

namespace querysum {

// Additive pre-softmax mask value for forbidden attention entries.
inline constexpr double kAttentionMask = -1e9;

// Epsilon inside the layer-norm variance term.
inline constexpr double kLayerNormEps = 1e-5;

/// C = A * B
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// C = A * B^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
/// C = A^T * B
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

/// out = X * W^T + b, applied row-wise. X: [n x in], W: [out x in], b: [out].
Tensor2 linear(const Tensor2& w, const Vec& b, const Tensor2& x);

struct LinearGrads {
    Tensor2 w;
    Vec b;
    Tensor2 x;
};

/// Chain-rule gradients of `linear` given dL/dout.
LinearGrads linear_backward(const Tensor2& w, const Tensor2& x, const Tensor2& grad_out);

/// Row-wise softmax, computed with max-subtraction for stability.
Tensor2 softmax_rows(const Tensor2& x);

/// dL/dx given the softmax output and dL/dsoftmax.
Tensor2 softmax_rows_backward(const Tensor2& softmax_out, const Tensor2& grad_out);

/// Normalizes x to mean 0 / variance 1 (eps-regularized), then gain * x_hat + bias.
Vec layer_norm(const Vec& x, const Vec& gain, const Vec& bias);

struct LayerNormCache {
    Tensor2 normalized; // x_hat rows
    Vec inv_std;        // 1 / sqrt(var + eps) per row
};

/// Row-wise layer norm with gain/bias shared across rows.
Tensor2 layer_norm_rows(const Tensor2& x, const Vec& gain, const Vec& bias, LayerNormCache* cache = nullptr);

struct LayerNormGrads {
    Tensor2 x;
    Vec gain;
    Vec bias;
};

LayerNormGrads layer_norm_rows_backward(const LayerNormCache& cache, const Vec& gain, const Tensor2& grad_out);

Tensor2 relu(const Tensor2& x);
Tensor2 relu_backward(const Tensor2& pre_activation, const Tensor2& grad_out);

Tensor2 sigmoid(const Tensor2& x);
Vec sigmoid(const Vec& x);

struct CrossEntropy {
    double loss = 0.0;
    Tensor2 probs;       // softmax of logits, one row per observation
    Tensor2 grad_logits; // (softmax - onehot) / N
};

/// Mean categorical cross-entropy over rows. Labels are 1-based class ids in [1, C].
CrossEntropy cross_entropy(const Tensor2& logits, const std::vector<int>& labels);

} // namespace querysum
