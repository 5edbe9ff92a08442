#include "querysum/booster.hpp"

#include <cmath>

namespace querysum {

Tensor2 embed_tokens(const std::vector<int>& tokens, const BoosterParams& params, const BoosterConfig& config) {
    const int n = static_cast<int>(tokens.size());
    require(n <= config.max_tokens, "embed_tokens: query of " + std::to_string(n) +
                                        " tokens exceeds max_tokens " + std::to_string(config.max_tokens));
    Tensor2 x(n, config.embed_dim);
    for (int i = 0; i < n; ++i) {
        const int id = tokens[i];
        require(id >= 0 && id < config.vocab_size,
                "embed_tokens: token id " + std::to_string(id) + " outside vocabulary");
        double* row = x.row(i);
        for (int e = 0; e < config.embed_dim; ++e) {
            row[e] = params.token_embedding.at(e, id) + params.positional.at(i, e);
        }
    }
    return x;
}

Tensor2 masked_self_attention(const Tensor2& x, const BoosterParams& params, BoosterCache* cache) {
    require(x.rows >= 1, "masked_self_attention: at least one token required");
    const int n = x.rows;
    const int hidden = params.w_query.rows;
    Tensor2 q = linear(params.w_query, params.b_query, x);
    Tensor2 k = linear(params.w_key, params.b_key, x);
    Tensor2 v = linear(params.w_value, params.b_value, x);

    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    Tensor2 scores = matmul_nt(q, k);
    for (int i = 0; i < n; ++i) {
        double* row = scores.row(i);
        for (int j = 0; j < n; ++j) {
            row[j] *= scale;
            if (j > i) row[j] += kAttentionMask; // causal mask
        }
    }
    Tensor2 attn = softmax_rows(scores);
    Tensor2 out = matmul(attn, v);
    if (cache) {
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->attn = attn;
        cache->attn_out = out;
    }
    return out;
}

BoosterEncoding booster_encode(const std::vector<int>& tokens, const BoosterParams& params,
                               const BoosterConfig& config, BoosterCache* cache) {
    BoosterEncoding enc;
    if (cache) cache->tokens = tokens;
    if (tokens.empty()) {
        enc.r_context = Tensor2(0, config.hidden_dim);
        enc.z_ta = params.null_query;
        return enc;
    }
    Tensor2 x = embed_tokens(tokens, params, config);
    if (cache) cache->x = x;
    Tensor2 attn_out = masked_self_attention(x, params, cache);

    LayerNormCache ln_local;
    LayerNormCache* ln = cache ? &cache->ln : &ln_local;
    Tensor2 z_norm = layer_norm_rows(attn_out, params.ln_gain, params.ln_bias, ln);

    Tensor2 ffn_pre = linear(params.ffn_w1, params.ffn_b1, z_norm);
    Tensor2 ffn_hidden = relu(ffn_pre);
    Tensor2 r_context = linear(params.ffn_w2, params.ffn_b2, ffn_hidden);

    Tensor2 gate = sigmoid(linear(params.gate_w, params.gate_b, r_context));

    const int n = r_context.rows;
    Vec z_ta(config.hidden_dim, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* g = gate.row(i);
        const double* r = r_context.row(i);
        for (int h = 0; h < config.hidden_dim; ++h) z_ta[h] += g[h] * r[h];
    }
    for (double& v : z_ta) v /= n;

    if (cache) {
        cache->z_norm = std::move(z_norm);
        cache->ffn_pre = std::move(ffn_pre);
        cache->ffn_hidden = std::move(ffn_hidden);
        cache->r_context = r_context;
        cache->gate = std::move(gate);
    }
    enc.r_context = std::move(r_context);
    enc.z_ta = std::move(z_ta);
    return enc;
}

void booster_backward(const Vec& dz_ta, const BoosterCache& cache, const BoosterParams& params,
                      BoosterParams& grads) {
    const int hidden = static_cast<int>(dz_ta.size());
    if (cache.tokens.empty()) {
        for (int h = 0; h < hidden; ++h) grads.null_query[h] += dz_ta[h];
        return;
    }
    const int n = static_cast<int>(cache.tokens.size());

    // z_ta = mean_n(gate ⊙ r_context)
    Tensor2 d_gate(n, hidden);
    Tensor2 d_r(n, hidden);
    for (int i = 0; i < n; ++i) {
        const double* g = cache.gate.row(i);
        const double* r = cache.r_context.row(i);
        double* dg = d_gate.row(i);
        double* dr = d_r.row(i);
        for (int h = 0; h < hidden; ++h) {
            const double upstream = dz_ta[h] / n;
            dg[h] = upstream * r[h];
            dr[h] = upstream * g[h];
        }
    }

    // textual-attention gate: gate = sigmoid(r W_t^T + b_t)
    Tensor2 d_gate_pre(n, hidden);
    for (int i = 0; i < n; ++i) {
        const double* g = cache.gate.row(i);
        const double* dg = d_gate.row(i);
        double* dp = d_gate_pre.row(i);
        for (int h = 0; h < hidden; ++h) dp[h] = dg[h] * g[h] * (1.0 - g[h]);
    }
    {
        LinearGrads lg = linear_backward(params.gate_w, cache.r_context, d_gate_pre);
        for (size_t i = 0; i < lg.w.size(); ++i) grads.gate_w.data[i] += lg.w.data[i];
        for (size_t i = 0; i < lg.b.size(); ++i) grads.gate_b[i] += lg.b[i];
        for (size_t i = 0; i < lg.x.size(); ++i) d_r.data[i] += lg.x.data[i];
    }

    // FFN: r = relu(z_norm W_1^T + b_1) W_2^T + b_2
    Tensor2 d_z_norm;
    {
        LinearGrads lg2 = linear_backward(params.ffn_w2, cache.ffn_hidden, d_r);
        for (size_t i = 0; i < lg2.w.size(); ++i) grads.ffn_w2.data[i] += lg2.w.data[i];
        for (size_t i = 0; i < lg2.b.size(); ++i) grads.ffn_b2[i] += lg2.b[i];
        Tensor2 d_ffn_pre = relu_backward(cache.ffn_pre, lg2.x);
        LinearGrads lg1 = linear_backward(params.ffn_w1, cache.z_norm, d_ffn_pre);
        for (size_t i = 0; i < lg1.w.size(); ++i) grads.ffn_w1.data[i] += lg1.w.data[i];
        for (size_t i = 0; i < lg1.b.size(); ++i) grads.ffn_b1[i] += lg1.b[i];
        d_z_norm = std::move(lg1.x);
    }

    // layer norm
    LayerNormGrads lng = layer_norm_rows_backward(cache.ln, params.ln_gain, d_z_norm);
    for (size_t i = 0; i < lng.gain.size(); ++i) grads.ln_gain[i] += lng.gain[i];
    for (size_t i = 0; i < lng.bias.size(); ++i) grads.ln_bias[i] += lng.bias[i];
    Tensor2 d_attn_out = std::move(lng.x);

    // attention: out = attn V, attn = softmax(masked(Q K^T * scale))
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    Tensor2 d_attn = matmul_nt(d_attn_out, cache.v);
    Tensor2 d_v = matmul_tn(cache.attn, d_attn_out);
    Tensor2 d_scores = softmax_rows_backward(cache.attn, d_attn);
    for (double& s : d_scores.data) s *= scale;
    Tensor2 d_q = matmul(d_scores, cache.k);
    Tensor2 d_k = matmul_tn(d_scores, cache.q);

    Tensor2 d_x(n, cache.x.cols);
    {
        LinearGrads lq = linear_backward(params.w_query, cache.x, d_q);
        LinearGrads lk = linear_backward(params.w_key, cache.x, d_k);
        LinearGrads lv = linear_backward(params.w_value, cache.x, d_v);
        for (size_t i = 0; i < lq.w.size(); ++i) grads.w_query.data[i] += lq.w.data[i];
        for (size_t i = 0; i < lq.b.size(); ++i) grads.b_query[i] += lq.b[i];
        for (size_t i = 0; i < lk.w.size(); ++i) grads.w_key.data[i] += lk.w.data[i];
        for (size_t i = 0; i < lk.b.size(); ++i) grads.b_key[i] += lk.b[i];
        for (size_t i = 0; i < lv.w.size(); ++i) grads.w_value.data[i] += lv.w.data[i];
        for (size_t i = 0; i < lv.b.size(); ++i) grads.b_value[i] += lv.b[i];
        for (size_t i = 0; i < d_x.size(); ++i) d_x.data[i] = lq.x.data[i] + lk.x.data[i] + lv.x.data[i];
    }

    // embedding lookup: x_n = W_e[:, token_n] + P[n]
    for (int i = 0; i < n; ++i) {
        const int id = cache.tokens[i];
        const double* dx = d_x.row(i);
        for (int e = 0; e < d_x.cols; ++e) {
            grads.token_embedding.at(e, id) += dx[e];
            grads.positional.at(i, e) += dx[e];
        }
    }
}

} // namespace querysum
