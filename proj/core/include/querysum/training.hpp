#pragma once

#include <cstdint>

#include "querysum/adam.hpp"
#include "querysum/dataset.hpp"
#include "querysum/model.hpp"

namespace querysum {

/// Training configuration. Defaults match the published recipe: 100
/// epochs of Adam at lr 1e-7 with beta1 0.9, beta2 0.999, eps 1e-8,
/// F-measure beta 1, and two-second segments.
struct TrainConfig {
    int epochs = 100;
    int patience = 0; // > 0 stops after that many epochs without val improvement
    double lr = 1e-7;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double f_beta = 1.0;
    double budget = 0.15;
    int segment_seconds = 2;
    uint64_t seed = 0;
    SplitCounts split;
    bool use_pretraining = true;
    bool use_mutual_attention = true;
    bool use_semantics_booster = true;
    bool freeze_trunk = false; // fine-tune only the classifier head
    int embed_dim = 64;
    int max_tokens = 64;
    int ffn_mult = 4;

    AdamConfig adam() const { return {lr, beta1, beta2, epsilon}; }
};

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& json_text);

/// FNV-1a digest of the canonical config serialization.
std::string train_config_hash(const TrainConfig& config);

struct TrainReport {
    std::string phase;
    std::vector<double> train_loss; // one entry per epoch
    std::vector<double> val_loss;   // empty when the val split is empty
    std::string checkpoint_path;
    uint64_t seed = 0;
    std::string config_hash;
    size_t param_count = 0;
    double wall_seconds = 0.0;

    std::string to_json() const;
};

/// Model dimensions derived from the manifest (vocab, feature dim, C)
/// plus the config's encoder dims and ablation flags.
ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& config);

/// Prepares one video: frame-repeats features/scores to max_frames, lifts
/// segment boundaries through the repeat index map, and derives segment
/// pseudo labels and per-frame class targets from the annotator mean.
VideoBatch make_video_batch(const Dataset& dataset, const VideoData& video, int segment_seconds);

/// Mean categorical cross-entropy of a batch of logits (delegates to the
/// numeric core).
double compute_loss(const Tensor2& logits, const std::vector<int>& labels);

struct TrainResult {
    ModelParams model;
    TrainReport report;
};

/// Phase 1: minimize the loss against segment-level pseudo labels.
TrainResult pretrain(const Dataset& dataset, const Split& split, const TrainConfig& config);

/// Phase 2: minimize the frame-level loss, optionally starting from a
/// pretrained parameter set (`init_from`).
TrainResult finetune(const Dataset& dataset, const Split& split, const TrainConfig& config,
                     const ModelParams* init_from = nullptr);

} // namespace querysum
