#include "querysum/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "querysum/ops.hpp"
#include "querysum/pseudo_label.hpp"
#include "querysum/training.hpp"

namespace querysum {

using nlohmann::json;

int SummarySelection::selected_count() const {
    return static_cast<int>(std::count(mask.begin(), mask.end(), uint8_t{1}));
}

Vec expected_score(const Tensor2& class_distributions) {
    Vec out(class_distributions.rows, 0.0);
    for (int r = 0; r < class_distributions.rows; ++r) {
        const double* p = class_distributions.row(r);
        double sum = 0.0;
        double acc = 0.0;
        for (int c = 0; c < class_distributions.cols; ++c) {
            sum += p[c];
            acc += static_cast<double>(c + 1) * p[c];
        }
        require(std::abs(sum - 1.0) < 1e-6, "expected_score: row " + std::to_string(r) + " is not normalized");
        out[r] = acc;
    }
    return out;
}

namespace {

std::vector<uint8_t> top_k_mask(const Vec& scores, int k) {
    const int n = static_cast<int>(scores.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<uint8_t> mask(n, 0);
    for (int i = 0; i < k; ++i) mask[order[i]] = 1;
    return mask;
}

} // namespace

SummarySelection select_summary(const Vec& scores, double budget) {
    require(budget > 0.0 && budget <= 1.0, "select_summary: budget must lie in (0, 1]");
    require(!scores.empty(), "select_summary: empty score vector");
    const int n = static_cast<int>(scores.size());
    const int k = static_cast<int>(std::ceil(budget * n));
    SummarySelection sel;
    sel.budget = budget;
    sel.expected_scores = scores;
    sel.mask = top_k_mask(scores, std::min(k, n));
    return sel;
}

Vec collapse_to_original(const Vec& repeated_scores, const std::vector<int>& index_map, int frame_count) {
    require(repeated_scores.size() == index_map.size(), "collapse_to_original: score/index_map length mismatch");
    Vec sums(frame_count, 0.0);
    std::vector<int> counts(frame_count, 0);
    for (size_t i = 0; i < index_map.size(); ++i) {
        const int src = index_map[i];
        require(src >= 0 && src < frame_count, "collapse_to_original: index map out of range");
        sums[src] += repeated_scores[i];
        counts[src] += 1;
    }
    for (int f = 0; f < frame_count; ++f) {
        require(counts[f] > 0, "collapse_to_original: frame " + std::to_string(f) + " has no preimage");
        sums[f] /= counts[f];
    }
    return sums;
}

std::vector<uint8_t> annotator_mask(const std::vector<double>& scores, double budget) {
    require(budget > 0.0 && budget <= 1.0, "annotator_mask: budget must lie in (0, 1]");
    const int n = static_cast<int>(scores.size());
    const int k = std::min(n, static_cast<int>(std::ceil(budget * n)));
    return top_k_mask(scores, k);
}

double f_beta(const std::vector<uint8_t>& pred, const std::vector<std::vector<uint8_t>>& gt_masks, double beta) {
    require(!gt_masks.empty(), "f_beta: at least one ground-truth mask required");
    const size_t n = pred.size();
    double total = 0.0;
    for (const auto& gt : gt_masks) {
        require(gt.size() == n, "f_beta: mask length mismatch");
        int pred_count = 0;
        int gt_count = 0;
        int overlap = 0;
        for (size_t i = 0; i < n; ++i) {
            pred_count += pred[i] != 0;
            gt_count += gt[i] != 0;
            overlap += (pred[i] != 0 && gt[i] != 0);
        }
        const double p = pred_count > 0 ? static_cast<double>(overlap) / pred_count : 0.0;
        const double r = gt_count > 0 ? static_cast<double>(overlap) / gt_count : 0.0;
        const double denom = beta * beta * p + r;
        total += denom > 0.0 ? (1.0 + beta * beta) * p * r / denom : 0.0;
    }
    return total / static_cast<double>(gt_masks.size());
}

std::string EvalReport::to_json() const {
    json j;
    j["per_video"] = per_video;
    j["mean_f_beta"] = mean_f_beta;
    j["beta"] = beta;
    j["budget"] = budget;
    j["split"] = split;
    j["config_hash"] = config_hash;
    j["checkpoint_hash"] = checkpoint_hash;
    return j.dump(2);
}

namespace {

SummarySelection score_video(const ModelParams& model, const Dataset& dataset, const VideoData& video,
                             const std::vector<int>& query_tokens, double budget) {
    VideoBatch batch = make_video_batch(dataset, video, 2);
    batch.tokens = query_tokens;
    const Tensor2 logits = model_forward(model, batch);
    const Vec repeated = expected_score(softmax_rows(logits));
    const std::vector<int> map = frame_repeat_index_map(video.meta.frame_count, dataset.manifest.max_frames);
    const Vec original = collapse_to_original(repeated, map, video.meta.frame_count);
    return select_summary(original, budget);
}

} // namespace

EvalReport evaluate(const ModelParams& model, const Dataset& dataset, const std::vector<std::string>& video_ids,
                    double budget, double beta, GroundTruthMode mode) {
    require(!video_ids.empty(), "evaluate: empty split");
    EvalReport report;
    report.beta = beta;
    report.budget = budget;
    double total = 0.0;
    for (const std::string& id : video_ids) {
        const VideoData& video = dataset.video(id);
        const SummarySelection sel = score_video(model, dataset, video, video.meta.query_tokens, budget);

        std::vector<std::vector<uint8_t>> gts;
        if (mode == GroundTruthMode::per_annotator) {
            for (const auto& scores : video.annotations.annotators) {
                gts.push_back(annotator_mask(scores, budget));
            }
        } else {
            gts.push_back(annotator_mask(aggregate_annotators(video.annotations), budget));
        }
        const double f = f_beta(sel.mask, gts, beta);
        report.per_video[id] = f;
        total += f;
    }
    report.mean_f_beta = total / static_cast<double>(video_ids.size());
    return report;
}

VideoSummary summarize_video(const ModelParams& model, const Dataset& dataset, const std::string& video_id,
                             const std::vector<int>& query_tokens, double budget) {
    const VideoData& video = dataset.video(video_id);
    VideoSummary summary;
    summary.video_id = video_id;
    summary.selection = score_video(model, dataset, video, query_tokens, budget);
    return summary;
}

} // namespace querysum
