#include "querysum/pseudo_label.hpp"

#include <algorithm>
#include <cmath>

namespace querysum {

SegmentBoundaries segment_boundaries(int frame_count, int fps) {
    require(frame_count >= 1, "segment_boundaries: frame_count must be >= 1");
    require(fps >= 1, "segment_boundaries: fps must be >= 1");
    const int window = 2 * fps;
    SegmentBoundaries segments;
    segments.reserve((frame_count + window - 1) / window);
    for (int start = 0; start < frame_count; start += window) {
        segments.push_back({start, std::min(start + window, frame_count)});
    }
    return segments;
}

std::vector<double> aggregate_annotators(const AnnotationSet& annotations) {
    require(!annotations.annotators.empty(), "aggregate_annotators: at least one annotator required");
    const size_t frames = annotations.annotators[0].size();
    for (const auto& seq : annotations.annotators) {
        require(seq.size() == frames, "aggregate_annotators: annotator sequence lengths differ");
    }
    std::vector<double> mean(frames, 0.0);
    for (const auto& seq : annotations.annotators) {
        for (size_t i = 0; i < frames; ++i) mean[i] += seq[i];
    }
    const double n = static_cast<double>(annotations.annotators.size());
    for (double& v : mean) v /= n;
    return mean;
}

int discretize_score(double mean_score, int num_classes, ScoreKind kind) {
    if (kind == ScoreKind::integer_categories) {
        // round half away from zero, clamped into [1, C]
        const int rounded = static_cast<int>(std::llround(mean_score));
        return std::clamp(rounded, 1, num_classes);
    }
    const int bin = static_cast<int>(std::floor(mean_score * num_classes)) + 1;
    return std::clamp(bin, 1, num_classes);
}

SegmentPseudoLabels generate_pseudo_labels(const std::vector<double>& frame_scores, int fps, int num_classes,
                                           ScoreKind kind) {
    require(!frame_scores.empty(), "generate_pseudo_labels: empty score sequence");
    for (double s : frame_scores) {
        if (kind == ScoreKind::integer_categories) {
            require(s >= 1.0 && s <= static_cast<double>(num_classes),
                    "generate_pseudo_labels: score outside [1, C]");
        } else {
            require(s >= 0.0 && s <= 1.0, "generate_pseudo_labels: score outside [0, 1]");
        }
    }
    const SegmentBoundaries bounds = segment_boundaries(static_cast<int>(frame_scores.size()), fps);
    SegmentPseudoLabels labels;
    labels.reserve(bounds.size());
    for (const Segment& seg : bounds) {
        double sum = 0.0;
        for (int f = seg.start; f < seg.end; ++f) sum += frame_scores[f];
        const double mean = sum / seg.length();
        labels.push_back({seg, mean, discretize_score(mean, num_classes, kind)});
    }
    return labels;
}

} // namespace querysum
