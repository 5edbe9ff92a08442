#include "querysum/model.hpp"

#include <cmath>
#include <random>

#include "querysum/ops.hpp"

namespace querysum {

namespace {

Tensor2 zeros(int r, int c) { return Tensor2(r, c); }

struct GlorotInit {
    std::mt19937_64 rng;

    explicit GlorotInit(uint64_t seed) : rng(seed) {}

    void matrix(Tensor2& t, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : t.data) v = dist(rng);
    }

    void table(Tensor2& t, double limit) {
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : t.data) v = dist(rng);
    }
};

void shape_booster(BoosterParams& b, const ModelConfig& c) {
    const int h = c.feature_dim;
    const int f = c.ffn_mult * h;
    b.token_embedding = zeros(c.embed_dim, c.vocab_size);
    b.positional = zeros(c.max_tokens, c.embed_dim);
    b.w_query = zeros(h, c.embed_dim);
    b.w_key = zeros(h, c.embed_dim);
    b.w_value = zeros(h, c.embed_dim);
    b.b_query.assign(h, 0.0);
    b.b_key.assign(h, 0.0);
    b.b_value.assign(h, 0.0);
    b.ln_gain.assign(h, 0.0);
    b.ln_bias.assign(h, 0.0);
    b.ffn_w1 = zeros(f, h);
    b.ffn_b1.assign(f, 0.0);
    b.ffn_w2 = zeros(h, f);
    b.ffn_b2.assign(h, 0.0);
    b.gate_w = zeros(h, h);
    b.gate_b.assign(h, 0.0);
    b.null_query.assign(h, 0.0);
}

void shape_fusion(FusionParams& p, const ModelConfig& c) {
    const int d = c.feature_dim;
    p.frame_gate_w = zeros(d, d);
    p.frame_gate_b.assign(d, 0.0);
    p.segment_gate_w = zeros(d, d);
    p.segment_gate_b.assign(d, 0.0);
    if (c.use_mutual_attention) {
        p.mutual_w = zeros(d, d);
        p.mutual_b.assign(d, 0.0);
    }
    p.head_w = zeros(c.num_classes, d);
    p.head_b.assign(c.num_classes, 0.0);
}

} // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) {
    ModelParams p;
    p.config = config;
    if (config.use_semantics_booster) {
        shape_booster(p.booster, config);
    } else {
        p.bow_w = Tensor2(config.feature_dim, config.vocab_size);
        p.bow_b.assign(config.feature_dim, 0.0);
    }
    shape_fusion(p.fusion, config);
    return p;
}

ModelParams ModelParams::init(const ModelConfig& config, uint64_t seed) {
    ModelParams p = zeros(config);
    GlorotInit g(seed);
    const int h = config.feature_dim;
    const int f = config.ffn_mult * h;
    if (config.use_semantics_booster) {
        BoosterParams& b = p.booster;
        g.table(b.token_embedding, 0.1);
        g.table(b.positional, 0.1);
        g.matrix(b.w_query, config.embed_dim, h);
        g.matrix(b.w_key, config.embed_dim, h);
        g.matrix(b.w_value, config.embed_dim, h);
        std::fill(b.ln_gain.begin(), b.ln_gain.end(), 1.0);
        g.matrix(b.ffn_w1, h, f);
        g.matrix(b.ffn_w2, f, h);
        g.matrix(b.gate_w, h, h);
        // multiplicative identity so an untrained null query passes
        // visual features through the Hadamard fusion unchanged
        std::fill(b.null_query.begin(), b.null_query.end(), 1.0);
    } else {
        g.matrix(p.bow_w, config.vocab_size, h);
    }
    g.matrix(p.fusion.frame_gate_w, h, h);
    g.matrix(p.fusion.segment_gate_w, h, h);
    if (config.use_mutual_attention) g.matrix(p.fusion.mutual_w, h, h);
    g.matrix(p.fusion.head_w, h, config.num_classes);
    return p;
}

std::vector<ParamView> ModelParams::param_views() {
    std::vector<ParamView> views;
    auto add = [&](const char* name, std::vector<double>& data) {
        views.push_back({name, std::span<double>(data)});
    };
    if (config.use_semantics_booster) {
        add("booster.token_embedding", booster.token_embedding.data);
        add("booster.positional", booster.positional.data);
        add("booster.w_query", booster.w_query.data);
        add("booster.b_query", booster.b_query);
        add("booster.w_key", booster.w_key.data);
        add("booster.b_key", booster.b_key);
        add("booster.w_value", booster.w_value.data);
        add("booster.b_value", booster.b_value);
        add("booster.ln_gain", booster.ln_gain);
        add("booster.ln_bias", booster.ln_bias);
        add("booster.ffn_w1", booster.ffn_w1.data);
        add("booster.ffn_b1", booster.ffn_b1);
        add("booster.ffn_w2", booster.ffn_w2.data);
        add("booster.ffn_b2", booster.ffn_b2);
        add("booster.gate_w", booster.gate_w.data);
        add("booster.gate_b", booster.gate_b);
        add("booster.null_query", booster.null_query);
    } else {
        add("bow.w", bow_w.data);
        add("bow.b", bow_b);
    }
    add("fusion.frame_gate_w", fusion.frame_gate_w.data);
    add("fusion.frame_gate_b", fusion.frame_gate_b);
    add("fusion.segment_gate_w", fusion.segment_gate_w.data);
    add("fusion.segment_gate_b", fusion.segment_gate_b);
    if (config.use_mutual_attention) {
        add("fusion.mutual_w", fusion.mutual_w.data);
        add("fusion.mutual_b", fusion.mutual_b);
    }
    add("fusion.head_w", fusion.head_w.data);
    add("fusion.head_b", fusion.head_b);
    return views;
}

size_t ModelParams::param_count() const {
    size_t n = 0;
    for (const ParamView& v : const_cast<ModelParams*>(this)->param_views()) n += v.values.size();
    return n;
}

namespace {

Vec bow_counts(const std::vector<int>& tokens, int vocab_size) {
    Vec counts(vocab_size, 0.0);
    for (int t : tokens) {
        require(t >= 0 && t < vocab_size, "bow: token id outside vocabulary");
        counts[t] += 1.0;
    }
    return counts;
}

Vec encode_query(const ModelParams& params, const std::vector<int>& tokens, ModelCache* cache) {
    if (params.config.use_semantics_booster) {
        BoosterEncoding enc = booster_encode(tokens, params.booster, params.config.booster_config(),
                                             cache ? &cache->booster : nullptr);
        return enc.z_ta;
    }
    Vec counts = bow_counts(tokens, params.config.vocab_size);
    Vec z_ta(params.config.feature_dim, 0.0);
    for (int h = 0; h < params.config.feature_dim; ++h) {
        double acc = params.bow_b[h];
        const double* row = params.bow_w.row(h);
        for (int v = 0; v < params.config.vocab_size; ++v) acc += row[v] * counts[v];
        z_ta[h] = acc;
    }
    if (cache) cache->bow_counts = std::move(counts);
    return z_ta;
}

} // namespace

Tensor2 model_forward(const ModelParams& params, const VideoBatch& batch, ModelCache* cache) {
    require(batch.frame_features.cols == params.config.feature_dim,
            "model_forward: frame feature width != configured feature_dim");
    require(batch.segment_features.cols == params.config.feature_dim,
            "model_forward: segment feature width != configured feature_dim");

    Vec z_ta = encode_query(params, batch.tokens, cache);

    Tensor2 z_as = visual_attention(batch.frame_features, params.fusion.frame_gate_w, params.fusion.frame_gate_b,
                                    cache ? &cache->frame_gate : nullptr);
    Tensor2 z_ast = visual_attention(batch.segment_features, params.fusion.segment_gate_w,
                                     params.fusion.segment_gate_b, cache ? &cache->segment_gate : nullptr);
    Tensor2 z_ast_frames = broadcast_segments(z_ast, batch.lifted_boundaries, batch.frame_features.rows);

    Tensor2 z_ma = mutual_attention(z_ta, z_as, z_ast_frames, params.fusion, params.config.use_mutual_attention,
                                    cache ? &cache->mutual : nullptr);
    Tensor2 logits = classify_frames(z_ma, params.fusion);

    if (cache) {
        cache->z_ta = std::move(z_ta);
        cache->z_as = std::move(z_as);
        cache->z_ast = std::move(z_ast);
        cache->z_ast_frames = std::move(z_ast_frames);
        cache->z_ma = std::move(z_ma);
        cache->logits = logits;
    }
    return logits;
}

double model_loss(const ModelParams& params, const VideoBatch& batch, Phase phase, ModelParams* grads) {
    ModelCache cache;
    Tensor2 logits = model_forward(params, batch, grads ? &cache : nullptr);

    CrossEntropy ce;
    Tensor2 d_logits;
    if (phase == Phase::pretrain) {
        Tensor2 seg_logits = pool_segment_logits(logits, batch.lifted_boundaries);
        ce = cross_entropy(seg_logits, batch.segment_labels);
        if (grads) {
            d_logits = pool_segment_logits_backward(ce.grad_logits, batch.lifted_boundaries, logits.rows);
        }
    } else {
        ce = cross_entropy(logits, batch.frame_labels);
        if (grads) d_logits = std::move(ce.grad_logits);
    }
    if (!grads) return ce.loss;

    // classifier head
    LinearGrads head = linear_backward(params.fusion.head_w, cache.z_ma, d_logits);
    for (size_t i = 0; i < head.w.size(); ++i) grads->fusion.head_w.data[i] += head.w.data[i];
    for (size_t i = 0; i < head.b.size(); ++i) grads->fusion.head_b[i] += head.b[i];

    // mutual attention
    MutualAttentionGrads ma = mutual_attention_backward(cache.z_ta, cache.z_as, cache.z_ast_frames, params.fusion,
                                                        params.config.use_mutual_attention, cache.mutual, head.x);
    if (params.config.use_mutual_attention) {
        for (size_t i = 0; i < ma.w.size(); ++i) grads->fusion.mutual_w.data[i] += ma.w.data[i];
        for (size_t i = 0; i < ma.b.size(); ++i) grads->fusion.mutual_b[i] += ma.b[i];
    }

    // visual branches
    VisualAttentionGrads frame_branch = visual_attention_backward(batch.frame_features, params.fusion.frame_gate_w,
                                                                  cache.frame_gate, ma.z_as);
    for (size_t i = 0; i < frame_branch.w.size(); ++i) grads->fusion.frame_gate_w.data[i] += frame_branch.w.data[i];
    for (size_t i = 0; i < frame_branch.b.size(); ++i) grads->fusion.frame_gate_b[i] += frame_branch.b[i];

    Tensor2 d_z_ast = broadcast_segments_backward(ma.z_ast_frames, batch.lifted_boundaries,
                                                  batch.segment_features.rows);
    VisualAttentionGrads seg_branch = visual_attention_backward(batch.segment_features, params.fusion.segment_gate_w,
                                                                cache.segment_gate, d_z_ast);
    for (size_t i = 0; i < seg_branch.w.size(); ++i) grads->fusion.segment_gate_w.data[i] += seg_branch.w.data[i];
    for (size_t i = 0; i < seg_branch.b.size(); ++i) grads->fusion.segment_gate_b[i] += seg_branch.b[i];

    // query encoder
    if (params.config.use_semantics_booster) {
        booster_backward(ma.z_ta, cache.booster, params.booster, grads->booster);
    } else {
        for (int h = 0; h < params.config.feature_dim; ++h) {
            grads->bow_b[h] += ma.z_ta[h];
            double* row = grads->bow_w.row(h);
            for (int v = 0; v < params.config.vocab_size; ++v) row[v] += ma.z_ta[h] * cache.bow_counts[v];
        }
    }
    return ce.loss;
}

} // namespace querysum
