#include "querysum/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

namespace querysum {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ScoreKind kind) {
    return kind == ScoreKind::integer_categories ? "integer_categories" : "continuous_unit_interval";
}

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "integer_categories") return ScoreKind::integer_categories;
    if (s == "continuous_unit_interval") return ScoreKind::continuous_unit_interval;
    throw DatasetError("unknown score_kind '" + s + "'");
}

Tensor2 FeatureTensor::to_tensor() const {
    Tensor2 t(rows, cols);
    for (size_t i = 0; i < values.size(); ++i) t.data[i] = static_cast<double>(values[i]);
    return t;
}

const VideoData& Dataset::video(const std::string& id) const {
    for (const VideoData& v : videos) {
        if (v.meta.video_id == id) return v;
    }
    throw DatasetError("video id '" + id + "' not present in dataset");
}

namespace {

json parse_json_file(const fs::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw DatasetError(what + ": cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DatasetError(what + ": " + path.string() + " does not parse: " + e.what());
    }
    return j;
}

// Raw little-endian float32 reader. Row count is dictated by the manifest;
// the file payload must match exactly rows * dim * 4 bytes.
FeatureTensor read_feature_file(const fs::path& path, int expected_rows, int dim, Granularity granularity,
                                const std::string& video_id, const std::string& field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("video '" + video_id + "', field '" + field + "': missing file " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    const uint64_t expected = static_cast<uint64_t>(expected_rows) * static_cast<uint64_t>(dim) * 4u;
    if (bytes != expected) {
        throw DatasetError("video '" + video_id + "', field '" + field + "': " + path.string() + " holds " +
                           std::to_string(bytes) + " bytes, expected " + std::to_string(expected) + " (" +
                           std::to_string(expected_rows) + " x " + std::to_string(dim) + " x 4)");
    }
    FeatureTensor t;
    t.rows = expected_rows;
    t.cols = dim;
    t.granularity = granularity;
    t.values.resize(static_cast<size_t>(expected_rows) * dim);
    static_assert(sizeof(float) == 4);
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(expected));
    if (!in) {
        throw DatasetError("video '" + video_id + "', field '" + field + "': short read on " + path.string());
    }
    for (float v : t.values) {
        if (!std::isfinite(v)) {
            throw DatasetError("video '" + video_id + "', field '" + field + "': non-finite feature value");
        }
    }
    return t;
}

AnnotationSet read_annotations(const fs::path& path, const VideoMeta& meta, ScoreKind kind, int num_classes) {
    json j = parse_json_file(path, "video '" + meta.video_id + "', field 'annotations'");
    if (!j.contains("annotators") || !j["annotators"].is_array() || j["annotators"].empty()) {
        throw DatasetError("video '" + meta.video_id + "', field 'annotations': needs a non-empty 'annotators' array");
    }
    AnnotationSet set;
    for (const auto& seq : j["annotators"]) {
        std::vector<double> scores;
        scores.reserve(seq.size());
        for (const auto& s : seq) scores.push_back(s.get<double>());
        if (static_cast<int>(scores.size()) != meta.frame_count) {
            throw DatasetError("video '" + meta.video_id + "', field 'annotations': annotator sequence length " +
                               std::to_string(scores.size()) + " != frame_count " +
                               std::to_string(meta.frame_count));
        }
        for (double s : scores) {
            if (kind == ScoreKind::integer_categories) {
                if (s < 1.0 || s > num_classes || s != std::floor(s)) {
                    throw DatasetError("video '" + meta.video_id + "', field 'annotations': score " +
                                       std::to_string(s) + " outside integer domain [1, " +
                                       std::to_string(num_classes) + "]");
                }
            } else if (s < 0.0 || s > 1.0) {
                throw DatasetError("video '" + meta.video_id + "', field 'annotations': score " +
                                   std::to_string(s) + " outside [0, 1]");
            }
        }
        set.annotators.push_back(std::move(scores));
    }
    return set;
}

int require_positive_int(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) throw DatasetError(context + ": missing field '" + key + "'");
    const int v = j.at(key).get<int>();
    if (v <= 0) throw DatasetError(context + ": field '" + key + "' must be positive");
    return v;
}

} // namespace

Dataset load_dataset(const fs::path& manifest_path) {
    json j = parse_json_file(manifest_path, "manifest");
    const fs::path root = manifest_path.parent_path();

    Dataset ds;
    DatasetManifest& m = ds.manifest;
    if (!j.contains("dataset_name")) throw DatasetError("manifest: missing field 'dataset_name'");
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.fps = require_positive_int(j, "fps", "manifest");
    m.num_classes = require_positive_int(j, "num_classes", "manifest");
    if (m.num_classes < 2) throw DatasetError("manifest: num_classes must be >= 2");
    m.score_kind = score_kind_from_string(j.at("score_kind").get<std::string>());
    m.max_frames = require_positive_int(j, "max_frames", "manifest");
    m.vocab_size = require_positive_int(j, "vocab_size", "manifest");
    m.feature_dim = j.contains("feature_dim") ? j.at("feature_dim").get<int>() : 512;
    if (m.feature_dim <= 0) throw DatasetError("manifest: feature_dim must be positive");

    if (!j.contains("videos") || !j["videos"].is_array() || j["videos"].empty()) {
        throw DatasetError("manifest: needs a non-empty 'videos' array");
    }

    for (const auto& vj : j["videos"]) {
        VideoMeta meta;
        if (!vj.contains("video_id")) throw DatasetError("manifest: video entry missing 'video_id'");
        meta.video_id = vj.at("video_id").get<std::string>();
        const std::string ctx = "video '" + meta.video_id + "'";
        meta.frame_count = require_positive_int(vj, "frame_count", ctx);
        meta.segment_count = require_positive_int(vj, "segment_count", ctx);
        if (vj.contains("query_tokens")) {
            for (const auto& t : vj.at("query_tokens")) {
                const int id = t.get<int>();
                if (id < 0 || id >= m.vocab_size) {
                    throw DatasetError(ctx + ", field 'query_tokens': token id " + std::to_string(id) +
                                       " outside vocabulary of size " + std::to_string(m.vocab_size));
                }
                meta.query_tokens.push_back(id);
            }
        }
        if (!vj.contains("files")) throw DatasetError(ctx + ": missing 'files' object");
        const auto& files = vj.at("files");
        meta.frame_features_file = files.at("frame_features").get<std::string>();
        meta.segment_features_file = files.at("segment_features").get<std::string>();
        meta.annotations_file = files.at("annotations").get<std::string>();

        if (meta.frame_count > m.max_frames) {
            throw DatasetError(ctx + ", field 'frame_count': " + std::to_string(meta.frame_count) +
                               " exceeds max_frames " + std::to_string(m.max_frames));
        }
        const int expected_segments = (meta.frame_count + 2 * m.fps - 1) / (2 * m.fps);
        if (meta.segment_count != expected_segments) {
            throw DatasetError(ctx + ", field 'segment_count': " + std::to_string(meta.segment_count) +
                               " != ceil(frame_count / (2*fps)) = " + std::to_string(expected_segments));
        }

        VideoData data;
        data.frame_features = read_feature_file(root / meta.frame_features_file, meta.frame_count, m.feature_dim,
                                                Granularity::frame, meta.video_id, "frame_features");
        data.segment_features = read_feature_file(root / meta.segment_features_file, meta.segment_count,
                                                  m.feature_dim, Granularity::segment, meta.video_id,
                                                  "segment_features");
        data.annotations = read_annotations(root / meta.annotations_file, meta, m.score_kind, m.num_classes);
        meta.annotator_count = data.annotations.annotator_count();
        data.meta = meta;
        m.videos.push_back(meta);
        ds.videos.push_back(std::move(data));
    }

    std::vector<std::string> ids;
    for (const VideoMeta& v : m.videos) ids.push_back(v.video_id);
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end()) {
        throw DatasetError("manifest: duplicate video id '" + *dup + "'");
    }
    return ds;
}

std::vector<int> frame_repeat_index_map(int frame_count, int target_len) {
    require(frame_count >= 1, "frame_repeat: frame_count must be >= 1");
    if (frame_count > target_len) {
        throw DatasetError("frame_repeat: frame_count " + std::to_string(frame_count) + " exceeds target length " +
                           std::to_string(target_len));
    }
    const int base = target_len / frame_count;
    const int extra = target_len % frame_count; // first `extra` frames get one more repeat
    std::vector<int> map;
    map.reserve(target_len);
    for (int f = 0; f < frame_count; ++f) {
        const int repeats = base + (f < extra ? 1 : 0);
        map.insert(map.end(), repeats, f);
    }
    return map;
}

FrameRepeated frame_repeat(const FeatureTensor& features, const AnnotationSet& scores, int target_len) {
    require(features.granularity == Granularity::frame, "frame_repeat: expects frame-level features");
    if (!scores.annotators.empty()) {
        require(scores.frame_count() == features.rows, "frame_repeat: scores not aligned to features");
    }
    FrameRepeated out;
    out.index_map = frame_repeat_index_map(features.rows, target_len);
    out.features.rows = target_len;
    out.features.cols = features.cols;
    out.features.granularity = Granularity::frame;
    out.features.values.resize(static_cast<size_t>(target_len) * features.cols);
    for (int i = 0; i < target_len; ++i) {
        const float* src = features.values.data() + static_cast<size_t>(out.index_map[i]) * features.cols;
        std::memcpy(out.features.values.data() + static_cast<size_t>(i) * features.cols, src,
                    sizeof(float) * features.cols);
    }
    out.scores.annotators.reserve(scores.annotators.size());
    for (const auto& seq : scores.annotators) {
        std::vector<double> repeated(target_len);
        for (int i = 0; i < target_len; ++i) repeated[i] = seq[out.index_map[i]];
        out.scores.annotators.push_back(std::move(repeated));
    }
    return out;
}

const std::vector<std::string>& Split::by_name(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw DatasetError("unknown split '" + name + "' (expected train, val, or test)");
}

Split split_dataset(const Dataset& dataset, const SplitCounts& counts, uint64_t seed) {
    const int total = static_cast<int>(dataset.videos.size());
    if (counts.train + counts.val + counts.test != total) {
        throw DatasetError("split counts " + std::to_string(counts.train) + "/" + std::to_string(counts.val) + "/" +
                           std::to_string(counts.test) + " do not sum to video count " + std::to_string(total));
    }
    std::vector<std::string> ids;
    ids.reserve(total);
    for (const VideoData& v : dataset.videos) ids.push_back(v.meta.video_id);

    // Explicit Fisher-Yates so the permutation is pinned by the seed alone.
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i + 1 < ids.size(); ++i) {
        const size_t j = i + rng() % (ids.size() - i);
        std::swap(ids[i], ids[j]);
    }

    Split split;
    split.train.assign(ids.begin(), ids.begin() + counts.train);
    split.val.assign(ids.begin() + counts.train, ids.begin() + counts.train + counts.val);
    split.test.assign(ids.begin() + counts.train + counts.val, ids.end());
    return split;
}

std::map<std::string, int> load_vocab(const fs::path& vocab_path) {
    json j = parse_json_file(vocab_path, "vocab");
    std::map<std::string, int> vocab;
    for (auto it = j.begin(); it != j.end(); ++it) {
        vocab[it.key()] = it.value().get<int>();
    }
    return vocab;
}

std::vector<int> tokenize(const std::string& text, const std::map<std::string, int>& vocab) {
    std::vector<int> ids;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        const auto it = vocab.find(word);
        ids.push_back(it == vocab.end() ? 0 : it->second);
        word.clear();
    };
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else {
            flush();
        }
    }
    flush();
    return ids;
}

} // namespace querysum
