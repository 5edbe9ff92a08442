#pragma once

#include <cstdint>

#include "querysum/booster.hpp"
#include "querysum/fusion.hpp"

namespace querysum {

enum class Phase { pretrain, finetune };

struct ModelConfig {
    int vocab_size = 1;
    int embed_dim = 64;
    int feature_dim = 512; // width of visual features and of z_ta
    int max_tokens = 64;
    int ffn_mult = 4;
    int num_classes = 2;
    bool use_semantics_booster = true;
    bool use_mutual_attention = true;

    BoosterConfig booster_config() const {
        return {vocab_size, embed_dim, feature_dim, max_tokens, ffn_mult};
    }
    bool operator==(const ModelConfig&) const = default;
};

/// All learnable state. Blocks that an ablation flag disables are left
/// empty and skipped by param enumeration, so parameter counts reflect
/// the active architecture.
struct ModelParams {
    ModelConfig config;
    BoosterParams booster; // when use_semantics_booster
    Tensor2 bow_w;         // [d x vocab], bag-of-words fallback encoder
    Vec bow_b;             // [d]
    FusionParams fusion;   // mutual_w/b empty when !use_mutual_attention

    /// Zero-valued parameter set (gradient accumulator shape).
    static ModelParams zeros(const ModelConfig& config);
    /// Seeded random initialization.
    static ModelParams init(const ModelConfig& config, uint64_t seed);

    /// Active blocks in a fixed order; params and their gradients always
    /// enumerate identically.
    std::vector<ParamView> param_views();
    size_t param_count() const;
};

/// One video's prepared training inputs: frame-repeated features, the
/// original segment features, and segment boundaries lifted through the
/// frame-repeat index map.
struct VideoBatch {
    std::string video_id;
    std::vector<int> tokens;
    Tensor2 frame_features;              // [M x d]
    Tensor2 segment_features;            // [S x d]
    SegmentBoundaries lifted_boundaries; // partition of [0, M), one entry per segment
    std::vector<int> frame_labels;       // [M], 1-based class ids
    std::vector<int> segment_labels;     // [S], 1-based class ids
};

struct ModelCache {
    BoosterCache booster;
    Vec bow_counts;
    Vec z_ta;
    Tensor2 frame_gate, segment_gate;
    Tensor2 z_as, z_ast, z_ast_frames;
    MutualAttentionCache mutual;
    Tensor2 z_ma;
    Tensor2 logits;
};

/// Frame-level logits [M x C].
Tensor2 model_forward(const ModelParams& params, const VideoBatch& batch, ModelCache* cache = nullptr);

/// Cross-entropy loss of one video at the given granularity; accumulates
/// dLoss/dparams into `grads` when non-null.
double model_loss(const ModelParams& params, const VideoBatch& batch, Phase phase, ModelParams* grads);

} // namespace querysum
