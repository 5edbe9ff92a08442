#pragma once

#include "querysum/ops.hpp"
#include "querysum/tensor.hpp"

namespace querysum {

struct BoosterConfig {
    int vocab_size = 1;
    int embed_dim = 64;   // token embedding width
    int hidden_dim = 512; // attention/FFN width; equals the fused feature dim
    int max_tokens = 64;
    int ffn_mult = 4;
};

/// Learnable blocks of the query encoder: token embeddings, a learned
/// positional table, one masked self-attention block, layer norm, a
/// position-wise FFN, the element-wise textual-attention gate, and the
/// trainable null-query vector used when a video has no query.
struct BoosterParams {
    Tensor2 token_embedding; // [embed_dim x vocab_size], one column per token
    Tensor2 positional;      // [max_tokens x embed_dim]
    Tensor2 w_query, w_key, w_value; // [hidden x embed]
    Vec b_query, b_key, b_value;     // [hidden]
    Vec ln_gain, ln_bias;            // [hidden]
    Tensor2 ffn_w1;                  // [ffn_mult*hidden x hidden]
    Vec ffn_b1;
    Tensor2 ffn_w2;                  // [hidden x ffn_mult*hidden]
    Vec ffn_b2;
    Tensor2 gate_w;                  // [hidden x hidden]
    Vec gate_b;
    Vec null_query;                  // [hidden]
};

/// Intermediates kept by the forward pass for the backward pass.
struct BoosterCache {
    std::vector<int> tokens;
    Tensor2 x;          // embeddings + positional rows
    Tensor2 q, k, v;
    Tensor2 attn;       // row-stochastic attention weights
    Tensor2 attn_out;
    LayerNormCache ln;
    Tensor2 z_norm;
    Tensor2 ffn_pre;    // pre-ReLU
    Tensor2 ffn_hidden; // post-ReLU
    Tensor2 r_context;
    Tensor2 gate;       // sigmoid gate values
};

/// Row n = embedding column of token n plus positional row n.
Tensor2 embed_tokens(const std::vector<int>& tokens, const BoosterParams& params, const BoosterConfig& config);

/// Causal single-head attention: softmax(mask(Q K^T / sqrt(d_k))) V with
/// d_k = hidden_dim. Position i attends only to positions <= i.
Tensor2 masked_self_attention(const Tensor2& x, const BoosterParams& params, BoosterCache* cache = nullptr);

struct BoosterEncoding {
    Tensor2 r_context; // per-token context-aware representations
    Vec z_ta;          // pooled attentive query vector
};

/// Full query encoding. An empty token list yields the learned null-query
/// vector; otherwise z_ta is the position mean of gate * r_context.
BoosterEncoding booster_encode(const std::vector<int>& tokens, const BoosterParams& params,
                               const BoosterConfig& config, BoosterCache* cache = nullptr);

/// Accumulates dLoss/dparams into `grads` given dLoss/dz_ta.
void booster_backward(const Vec& dz_ta, const BoosterCache& cache, const BoosterParams& params,
                      BoosterParams& grads);

} // namespace querysum
