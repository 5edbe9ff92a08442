#pragma once

#include <map>

#include "querysum/dataset.hpp"
#include "querysum/model.hpp"

namespace querysum {

/// Budgeted frame selection over the original (pre-repeat) indexing.
struct SummarySelection {
    std::vector<uint8_t> mask; // 1 = frame included
    double budget = 0.15;
    Vec expected_scores; // per original frame

    int selected_count() const;
};

/// Expected class index per row: sum_c c * p(c) with classes 1..C.
/// Rows must be probability vectors.
Vec expected_score(const Tensor2& class_distributions);

/// Top ceil(budget * n) frames by score; ties broken by earlier index.
SummarySelection select_summary(const Vec& scores, double budget);

/// Averages repeated-position scores back onto original frames.
Vec collapse_to_original(const Vec& repeated_scores, const std::vector<int>& index_map, int frame_count);

/// Budgeted top-k mask over one annotator's raw scores (same rule as the
/// prediction side).
std::vector<uint8_t> annotator_mask(const std::vector<double>& scores, double budget);

/// Mean over annotators of (1 + b^2) p r / (b^2 p + r); a pair with
/// p = r = 0 contributes 0.
double f_beta(const std::vector<uint8_t>& pred, const std::vector<std::vector<uint8_t>>& gt_masks, double beta);

/// How ground-truth masks are derived: one mask per annotator (the
/// formula's (p_i, r_i) pairs) or a single mask from the annotator-mean
/// scores.
enum class GroundTruthMode { per_annotator, consensus };

struct EvalReport {
    std::map<std::string, double> per_video; // video id -> F_beta
    double mean_f_beta = 0.0;
    double beta = 1.0;
    double budget = 0.15;
    std::string split;
    std::string config_hash;
    std::string checkpoint_hash;

    std::string to_json() const;
};

/// Scores every video of the split: forward pass on the repeated frames,
/// expected scores collapsed to original indexing, budgeted selection,
/// then F_beta against annotator masks.
EvalReport evaluate(const ModelParams& model, const Dataset& dataset, const std::vector<std::string>& video_ids,
                    double budget, double beta, GroundTruthMode mode = GroundTruthMode::per_annotator);

/// Per-frame summary artifacts for one video (the `summarize` CLI path).
struct VideoSummary {
    std::string video_id;
    SummarySelection selection;
};

VideoSummary summarize_video(const ModelParams& model, const Dataset& dataset, const std::string& video_id,
                             const std::vector<int>& query_tokens, double budget);

} // namespace querysum
