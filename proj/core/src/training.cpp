#include "querysum/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "querysum/checkpoint.hpp"
#include "querysum/ops.hpp"
#include "querysum/pseudo_label.hpp"

namespace querysum {

using nlohmann::json;

std::string train_config_to_json(const TrainConfig& c) {
    json j;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["epsilon"] = c.epsilon;
    j["f_beta"] = c.f_beta;
    j["budget"] = c.budget;
    j["segment_seconds"] = c.segment_seconds;
    j["seed"] = c.seed;
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    j["use_pretraining"] = c.use_pretraining;
    j["use_mutual_attention"] = c.use_mutual_attention;
    j["use_semantics_booster"] = c.use_semantics_booster;
    j["freeze_trunk"] = c.freeze_trunk;
    j["embed_dim"] = c.embed_dim;
    j["max_tokens"] = c.max_tokens;
    j["ffn_mult"] = c.ffn_mult;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    json j = json::parse(text);
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.f_beta = j.value("f_beta", c.f_beta);
    c.budget = j.value("budget", c.budget);
    c.segment_seconds = j.value("segment_seconds", c.segment_seconds);
    c.seed = j.value("seed", c.seed);
    if (j.contains("split")) {
        c.split.train = j["split"].value("train", 0);
        c.split.val = j["split"].value("val", 0);
        c.split.test = j["split"].value("test", 0);
    }
    c.use_pretraining = j.value("use_pretraining", c.use_pretraining);
    c.use_mutual_attention = j.value("use_mutual_attention", c.use_mutual_attention);
    c.use_semantics_booster = j.value("use_semantics_booster", c.use_semantics_booster);
    c.freeze_trunk = j.value("freeze_trunk", c.freeze_trunk);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    return c;
}

std::string train_config_hash(const TrainConfig& config) {
    return fnv1a_hex(train_config_to_json(config));
}

std::string TrainReport::to_json() const {
    json j;
    j["phase"] = phase;
    j["train_loss"] = train_loss;
    j["val_loss"] = val_loss;
    j["checkpoint_path"] = checkpoint_path;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["param_count"] = param_count;
    j["wall_seconds"] = wall_seconds;
    return j.dump(2);
}

ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& config) {
    ModelConfig mc;
    mc.vocab_size = dataset.manifest.vocab_size;
    mc.embed_dim = config.embed_dim;
    mc.feature_dim = dataset.manifest.feature_dim;
    mc.max_tokens = config.max_tokens;
    mc.ffn_mult = config.ffn_mult;
    mc.num_classes = dataset.manifest.num_classes;
    mc.use_semantics_booster = config.use_semantics_booster;
    mc.use_mutual_attention = config.use_mutual_attention;
    return mc;
}

VideoBatch make_video_batch(const Dataset& dataset, const VideoData& video, int segment_seconds) {
    const DatasetManifest& m = dataset.manifest;
    // The manifest's segment features are laid out on two-second windows;
    // other granularities would not align with them.
    require(segment_seconds == 2, "make_video_batch: segment features are two-second aligned");

    VideoBatch batch;
    batch.video_id = video.meta.video_id;
    batch.tokens = video.meta.query_tokens;

    FrameRepeated repeated = frame_repeat(video.frame_features, video.annotations, m.max_frames);
    batch.frame_features = repeated.features.to_tensor();
    batch.segment_features = video.segment_features.to_tensor();

    // boundaries live on original frames and are lifted through the repeat map
    const SegmentBoundaries original = segment_boundaries(video.meta.frame_count, m.fps);
    require(static_cast<int>(original.size()) == video.meta.segment_count,
            "make_video_batch: segment feature rows do not match the boundary count for video '" +
                video.meta.video_id + "'");
    batch.lifted_boundaries.reserve(original.size());
    const std::vector<int>& map = repeated.index_map;
    for (const Segment& seg : original) {
        const auto first = std::lower_bound(map.begin(), map.end(), seg.start);
        const auto last = std::lower_bound(map.begin(), map.end(), seg.end);
        batch.lifted_boundaries.push_back(
            {static_cast<int>(first - map.begin()), static_cast<int>(last - map.begin())});
    }

    const std::vector<double> frame_mean = aggregate_annotators(video.annotations);
    const SegmentPseudoLabels pseudo = generate_pseudo_labels(frame_mean, m.fps, m.num_classes, m.score_kind);
    batch.segment_labels.reserve(pseudo.size());
    for (const SegmentLabel& label : pseudo) batch.segment_labels.push_back(label.class_id);

    batch.frame_labels.resize(m.max_frames);
    for (int i = 0; i < m.max_frames; ++i) {
        batch.frame_labels[i] = discretize_score(frame_mean[map[i]], m.num_classes, m.score_kind);
    }
    return batch;
}

double compute_loss(const Tensor2& logits, const std::vector<int>& labels) {
    return cross_entropy(logits, labels).loss;
}

namespace {

std::vector<ParamView> trainable_views(ModelParams& model, const TrainConfig& config, Phase phase) {
    std::vector<ParamView> views = model.param_views();
    if (phase == Phase::finetune && config.freeze_trunk) {
        std::erase_if(views, [](const ParamView& v) { return !v.name.starts_with("fusion.head_"); });
    }
    return views;
}

TrainResult train_phase(const Dataset& dataset, const Split& split, const TrainConfig& config, Phase phase,
                        const ModelParams* init_from) {
    require(config.epochs >= 1, "training: epochs must be >= 1");
    require(config.lr > 0.0, "training: lr must be > 0");
    require(!split.train.empty(), "training: train split is empty");
    const auto started = std::chrono::steady_clock::now();

    const ModelConfig mc = model_config_for(dataset, config);
    ModelParams model = [&] {
        if (init_from) {
            require(init_from->config == mc,
                    "training: init checkpoint's model config does not match this run's config");
            return *init_from;
        }
        return ModelParams::init(mc, config.seed);
    }();

    std::vector<VideoBatch> train_batches;
    for (const std::string& id : split.train) {
        train_batches.push_back(make_video_batch(dataset, dataset.video(id), config.segment_seconds));
    }
    std::vector<VideoBatch> val_batches;
    for (const std::string& id : split.val) {
        val_batches.push_back(make_video_batch(dataset, dataset.video(id), config.segment_seconds));
    }

    std::vector<ParamView> params = trainable_views(model, config, phase);
    AdamState adam = AdamState::for_params(params);

    TrainResult result;
    TrainReport& report = result.report;
    report.phase = phase == Phase::pretrain ? "pretrain" : "finetune";
    report.seed = config.seed;
    report.config_hash = train_config_hash(config);
    report.param_count = model.param_count();

    ModelParams grads = ModelParams::zeros(mc);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (const VideoBatch& batch : train_batches) {
            for (ParamView& v : grads.param_views()) std::fill(v.values.begin(), v.values.end(), 0.0);
            const double loss = model_loss(model, batch, phase, &grads);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("training: non-finite loss on video '" + batch.video_id + "' at epoch " +
                                         std::to_string(epoch + 1));
            }
            epoch_loss += loss;
            std::vector<ParamView> grad_views = trainable_views(grads, config, phase);
            adam_step(config.adam(), adam, params, grad_views);
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(train_batches.size()));

        if (!val_batches.empty()) {
            double val = 0.0;
            for (const VideoBatch& batch : val_batches) val += model_loss(model, batch, phase, nullptr);
            report.val_loss.push_back(val / static_cast<double>(val_batches.size()));
        }
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.model = std::move(model);
    return result;
}

} // namespace

TrainResult pretrain(const Dataset& dataset, const Split& split, const TrainConfig& config) {
    return train_phase(dataset, split, config, Phase::pretrain, nullptr);
}

TrainResult finetune(const Dataset& dataset, const Split& split, const TrainConfig& config,
                     const ModelParams* init_from) {
    return train_phase(dataset, split, config, Phase::finetune, init_from);
}

} // namespace querysum
