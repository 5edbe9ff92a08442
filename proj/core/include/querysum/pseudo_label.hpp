#pragma once

#include <vector>

#include "querysum/dataset.hpp"

namespace querysum {

/// Half-open frame range [start, end).
struct Segment {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool operator==(const Segment&) const = default;
};

using SegmentBoundaries = std::vector<Segment>;

struct SegmentLabel {
    Segment bounds;
    double mean_score = 0.0;
    int class_id = 0; // in [1, C]
};

using SegmentPseudoLabels = std::vector<SegmentLabel>;

/// Two-second windows over [0, frame_count): ceil(frame_count / (2*fps))
/// contiguous segments, the last possibly partial.
SegmentBoundaries segment_boundaries(int frame_count, int fps);

/// Per-frame arithmetic mean across annotators.
std::vector<double> aggregate_annotators(const AnnotationSet& annotations);

/// Maps a mean score to a 1-based class id. Integer-category scores round
/// half away from zero; continuous scores fall into C equal-width bins
/// over [0, 1].
int discretize_score(double mean_score, int num_classes, ScoreKind kind);

/// Segment-level mean scores plus their discretized class targets.
SegmentPseudoLabels generate_pseudo_labels(const std::vector<double>& frame_scores, int fps, int num_classes,
                                           ScoreKind kind);

} // namespace querysum
