#include "querysum/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "querysum/pseudo_label.hpp"

namespace querysum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_f32_le(std::ostream& out, float value) {
    const uint32_t bits = std::bit_cast<uint32_t>(value);
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_feature_file(const fs::path& path, const std::vector<std::vector<float>>& rows) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path.string());
    for (const auto& row : rows) {
        for (float v : row) write_f32_le(out, v);
    }
}

// baseline 1 + class bump + noise; bumps live on per-class coordinate blocks
std::vector<float> feature_row(int class_id, const SyntheticSpec& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<float> row(spec.feature_dim);
    const int block = spec.feature_dim / spec.num_classes;
    const int lo = (class_id - 1) * block;
    const int hi = lo + block;
    for (int j = 0; j < spec.feature_dim; ++j) {
        double v = 1.0 + spec.noise * gauss(rng);
        if (j >= lo && j < hi) v += spec.signal;
        row[j] = static_cast<float>(v);
    }
    return row;
}

} // namespace

fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticSpec& spec) {
    require(spec.num_videos >= 1 && spec.min_frames >= 1 && spec.max_frames >= spec.min_frames,
            "synthetic: bad video/frame counts");
    require(spec.num_classes >= 2 && spec.feature_dim >= spec.num_classes, "synthetic: bad class/feature dims");
    require(spec.vocab_size >= 2 || spec.query_len == 0, "synthetic: vocabulary too small for queries");

    fs::create_directories(dir / "features");
    fs::create_directories(dir / "annotations");

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> frame_dist(spec.min_frames, spec.max_frames);
    std::uniform_int_distribution<int> class_dist(1, std::max(1, spec.num_classes - 1));
    std::uniform_int_distribution<int> token_dist(1, std::max(1, spec.vocab_size - 1));

    json videos = json::array();
    for (int v = 0; v < spec.num_videos; ++v) {
        const std::string id = "v" + std::to_string(v);
        const int frames = frame_dist(rng);

        // Classes are segment-coherent (scores drift slowly in real videos,
        // and coherent segments make the pretext labels informative), with a
        // contiguous top-class run of exactly ceil(top_fraction * frames)
        // frames starting on a segment boundary.
        const int window = 2 * spec.fps;
        std::vector<int> classes(frames);
        for (int start = 0; start < frames; start += window) {
            const int c = class_dist(rng);
            for (int f = start; f < std::min(start + window, frames); ++f) classes[f] = c;
        }
        const int top = static_cast<int>(std::ceil(spec.top_fraction * frames));
        const int max_start_segment = (frames - top) / window;
        const int run_start = static_cast<int>(rng() % static_cast<uint64_t>(max_start_segment + 1)) * window;
        for (int f = run_start; f < run_start + top; ++f) classes[f] = spec.num_classes;

        std::vector<double> frame_scores(frames);
        for (int f = 0; f < frames; ++f) {
            frame_scores[f] = spec.score_kind == ScoreKind::integer_categories
                                  ? static_cast<double>(classes[f])
                                  : (classes[f] - 0.5) / spec.num_classes; // bin centers
        }

        std::vector<std::vector<float>> frame_rows;
        frame_rows.reserve(frames);
        for (int f = 0; f < frames; ++f) frame_rows.push_back(feature_row(classes[f], spec, rng));
        write_feature_file(dir / "features" / (id + ".frames.f32"), frame_rows);

        const SegmentPseudoLabels pseudo =
            generate_pseudo_labels(frame_scores, spec.fps, spec.num_classes, spec.score_kind);
        std::vector<std::vector<float>> segment_rows;
        segment_rows.reserve(pseudo.size());
        for (const SegmentLabel& label : pseudo) segment_rows.push_back(feature_row(label.class_id, spec, rng));
        write_feature_file(dir / "features" / (id + ".segments.f32"), segment_rows);

        json annotators = json::array();
        for (int a = 0; a < spec.annotators; ++a) annotators.push_back(frame_scores);
        std::ofstream ann(dir / "annotations" / (id + ".json"));
        ann << json{{"annotators", annotators}}.dump() << '\n';

        std::vector<int> tokens;
        for (int t = 0; t < spec.query_len; ++t) tokens.push_back(token_dist(rng));

        videos.push_back({{"video_id", id},
                          {"frame_count", frames},
                          {"segment_count", pseudo.size()},
                          {"query_tokens", tokens},
                          {"files",
                           {{"frame_features", "features/" + id + ".frames.f32"},
                            {"segment_features", "features/" + id + ".segments.f32"},
                            {"annotations", "annotations/" + id + ".json"}}}});
    }

    int max_frames = 0;
    for (const auto& v : videos) max_frames = std::max(max_frames, v.at("frame_count").get<int>());

    json manifest{{"dataset_name", spec.name},
                  {"fps", spec.fps},
                  {"num_classes", spec.num_classes},
                  {"score_kind", to_string(spec.score_kind)},
                  {"max_frames", max_frames},
                  {"vocab_size", spec.vocab_size},
                  {"feature_dim", spec.feature_dim},
                  {"videos", videos}};
    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << '\n';

    json vocab;
    for (int t = 1; t < spec.vocab_size; ++t) vocab["tok" + std::to_string(t)] = t;
    std::ofstream vout(dir / "vocab.json");
    vout << vocab.dump(2) << '\n';

    return manifest_path;
}

} // namespace querysum
