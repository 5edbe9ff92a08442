#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "querysum/tensor.hpp"

namespace querysum {

enum class ScoreKind {
    integer_categories,      // integer scores in [1, C]
    continuous_unit_interval // real scores in [0, 1]
};

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& s);

enum class Granularity { frame, segment };

/// Raw feature matrix as stored on disk: little-endian float32, row-major,
/// one row per frame or per segment, `dim` columns.
struct FeatureTensor {
    int rows = 0;
    int cols = 0;
    Granularity granularity = Granularity::frame;
    std::vector<float> values;

    float at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }

    /// Widening copy for the 64-bit training path.
    Tensor2 to_tensor() const;
};

/// Per-annotator frame score sequences, all aligned to the same frame count.
struct AnnotationSet {
    std::vector<std::vector<double>> annotators;

    int annotator_count() const { return static_cast<int>(annotators.size()); }
    int frame_count() const { return annotators.empty() ? 0 : static_cast<int>(annotators[0].size()); }
};

struct VideoMeta {
    std::string video_id;
    int frame_count = 0;
    int segment_count = 0;
    std::vector<int> query_tokens; // empty when the dataset has no queries
    int annotator_count = 0;
    std::string frame_features_file;
    std::string segment_features_file;
    std::string annotations_file;
};

struct DatasetManifest {
    std::string dataset_name;
    int fps = 1;
    int num_classes = 2;
    ScoreKind score_kind = ScoreKind::integer_categories;
    int max_frames = 1;
    int vocab_size = 1;
    int feature_dim = 512;
    std::vector<VideoMeta> videos;
};

struct VideoData {
    VideoMeta meta;
    FeatureTensor frame_features;   // [frame_count x feature_dim]
    FeatureTensor segment_features; // [segment_count x feature_dim]
    AnnotationSet annotations;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<VideoData> videos;

    const VideoData& video(const std::string& id) const;
};

/// Thrown for every validation failure; the message names the offending
/// video id and field.
struct DatasetError : std::runtime_error {
    explicit DatasetError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parses manifest.json, loads every referenced feature/annotation file,
/// and validates shapes, score domains, and id uniqueness.
Dataset load_dataset(const std::filesystem::path& manifest_path);

struct FrameRepeated {
    FeatureTensor features;
    AnnotationSet scores;
    std::vector<int> index_map; // output position -> source frame, non-decreasing
};

/// Repeats frames in temporal order until the video reaches `target_len`.
/// Each source frame appears floor(M/n) or ceil(M/n) times, earlier frames
/// taking the extra repeats.
FrameRepeated frame_repeat(const FeatureTensor& features, const AnnotationSet& scores, int target_len);

/// The index map alone (used to lift segment boundaries and collapse scores).
std::vector<int> frame_repeat_index_map(int frame_count, int target_len);

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;
};

struct Split {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;

    const std::vector<std::string>& by_name(const std::string& name) const;
};

/// Deterministic seeded shuffle of the manifest's video ids into three
/// disjoint lists. Counts must sum to the total number of videos.
Split split_dataset(const Dataset& dataset, const SplitCounts& counts, uint64_t seed);

/// vocab.json: token string -> id map; id 0 is reserved for padding/unknown.
std::map<std::string, int> load_vocab(const std::filesystem::path& vocab_path);

/// Lowercases, splits on non-alphanumeric characters, and maps through the
/// vocabulary (missing words map to id 0).
std::vector<int> tokenize(const std::string& text, const std::map<std::string, int>& vocab);

} // namespace querysum
