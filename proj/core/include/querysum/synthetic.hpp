#pragma once

#include <filesystem>

#include "querysum/dataset.hpp"

namespace querysum {

/// Knobs for the synthetic dataset writer. Frame classes are planted as
/// additive bumps on a per-class coordinate block (on top of a baseline of
/// ones), segment features carry the segment's pseudo-class bump, and
/// annotator scores equal the planted classes, so both training phases
/// have learnable signal.
struct SyntheticSpec {
    std::string name = "synthetic";
    int num_videos = 4;
    int min_frames = 24;
    int max_frames = 32;
    int fps = 2;
    int num_classes = 5;
    int feature_dim = 32;
    int vocab_size = 24;
    ScoreKind score_kind = ScoreKind::integer_categories;
    int annotators = 1;
    int query_len = 4;          // 0 writes empty query token lists
    double signal = 1.0;        // class bump height
    double noise = 0.05;        // gaussian feature noise
    double top_fraction = 0.15; // fraction of frames pinned to the top class
    uint64_t seed = 1;
};

/// Writes manifest.json, features/*.f32, annotations/*.json, and
/// vocab.json under `dir`. Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec);

} // namespace querysum
