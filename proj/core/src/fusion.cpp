#include "querysum/fusion.hpp"

#include <algorithm>

#include "querysum/ops.hpp"

namespace querysum {

namespace {

// Multiplies in canonical value order so the result is bit-identical
// under any permutation of the three factors.
double hadamard3(double x, double y, double z) {
    if (x > y) std::swap(x, y);
    if (y > z) std::swap(y, z);
    if (x > y) std::swap(x, y);
    return (x * y) * z;
}

void check_coverage(const SegmentBoundaries& boundaries, int num_frames) {
    require(!boundaries.empty(), "segment boundaries empty");
    int expected_start = 0;
    for (const Segment& seg : boundaries) {
        require(seg.start == expected_start && seg.end > seg.start,
                "segment boundaries leave a coverage gap at frame " + std::to_string(expected_start));
        expected_start = seg.end;
    }
    require(expected_start == num_frames, "segment boundaries cover " + std::to_string(expected_start) +
                                              " frames, expected " + std::to_string(num_frames));
}

} // namespace

Tensor2 visual_attention(const Tensor2& features, const Tensor2& gate_w, const Vec& gate_b, Tensor2* gate_cache) {
    Tensor2 gate = sigmoid(linear(gate_w, gate_b, features));
    Tensor2 out(features.rows, features.cols);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = gate.data[i] * features.data[i];
    if (gate_cache) *gate_cache = std::move(gate);
    return out;
}

VisualAttentionGrads visual_attention_backward(const Tensor2& features, const Tensor2& gate_w,
                                               const Tensor2& gate_cache, const Tensor2& grad_out) {
    require(grad_out.same_shape(features), "visual_attention_backward: shape mismatch");
    Tensor2 d_gate_pre(features.rows, features.cols);
    for (size_t i = 0; i < d_gate_pre.size(); ++i) {
        const double g = gate_cache.data[i];
        d_gate_pre.data[i] = grad_out.data[i] * features.data[i] * g * (1.0 - g);
    }
    LinearGrads lg = linear_backward(gate_w, features, d_gate_pre);
    VisualAttentionGrads out;
    out.w = std::move(lg.w);
    out.b = std::move(lg.b);
    out.features = std::move(lg.x);
    for (size_t i = 0; i < out.features.size(); ++i) {
        out.features.data[i] += grad_out.data[i] * gate_cache.data[i];
    }
    return out;
}

Tensor2 broadcast_segments(const Tensor2& segment_rows, const SegmentBoundaries& boundaries, int num_frames) {
    check_coverage(boundaries, num_frames);
    require(static_cast<int>(boundaries.size()) == segment_rows.rows,
            "broadcast_segments: boundary count != segment row count");
    Tensor2 out(num_frames, segment_rows.cols);
    for (size_t s = 0; s < boundaries.size(); ++s) {
        const double* src = segment_rows.row(static_cast<int>(s));
        for (int f = boundaries[s].start; f < boundaries[s].end; ++f) {
            std::copy(src, src + segment_rows.cols, out.row(f));
        }
    }
    return out;
}

Tensor2 broadcast_segments_backward(const Tensor2& grad_frames, const SegmentBoundaries& boundaries,
                                    int num_segments) {
    check_coverage(boundaries, grad_frames.rows);
    require(static_cast<int>(boundaries.size()) == num_segments,
            "broadcast_segments_backward: boundary count != segment count");
    Tensor2 out(num_segments, grad_frames.cols);
    for (int s = 0; s < num_segments; ++s) {
        double* dst = out.row(s);
        for (int f = boundaries[s].start; f < boundaries[s].end; ++f) {
            const double* src = grad_frames.row(f);
            for (int c = 0; c < grad_frames.cols; ++c) dst[c] += src[c];
        }
    }
    return out;
}

Tensor2 mutual_attention(const Vec& z_ta, const Tensor2& z_as, const Tensor2& z_ast_frames,
                         const FusionParams& params, bool use_gate, MutualAttentionCache* cache) {
    const int d = static_cast<int>(z_ta.size());
    require(z_as.cols == d && z_ast_frames.cols == d, "mutual_attention: width mismatch");
    require(z_as.rows == z_ast_frames.rows, "mutual_attention: frame count mismatch");
    Tensor2 hadamard(z_as.rows, d);
    for (int f = 0; f < z_as.rows; ++f) {
        const double* a = z_as.row(f);
        const double* b = z_ast_frames.row(f);
        double* h = hadamard.row(f);
        for (int c = 0; c < d; ++c) h[c] = hadamard3(z_ta[c], a[c], b[c]);
    }
    Tensor2 out;
    Tensor2 gate;
    if (use_gate) {
        gate = sigmoid(linear(params.mutual_w, params.mutual_b, hadamard));
        out = Tensor2(hadamard.rows, d);
        for (size_t i = 0; i < out.size(); ++i) out.data[i] = gate.data[i] * hadamard.data[i];
    } else {
        out = hadamard;
    }
    if (cache) {
        cache->hadamard = std::move(hadamard);
        cache->gate = std::move(gate);
    }
    return out;
}

MutualAttentionGrads mutual_attention_backward(const Vec& z_ta, const Tensor2& z_as, const Tensor2& z_ast_frames,
                                               const FusionParams& params, bool use_gate,
                                               const MutualAttentionCache& cache, const Tensor2& grad_out) {
    const int d = static_cast<int>(z_ta.size());
    MutualAttentionGrads grads;
    grads.z_ta.assign(d, 0.0);
    grads.z_as = Tensor2(z_as.rows, d);
    grads.z_ast_frames = Tensor2(z_ast_frames.rows, d);

    Tensor2 d_hadamard(cache.hadamard.rows, d);
    if (use_gate) {
        Tensor2 d_gate_pre(cache.hadamard.rows, d);
        for (size_t i = 0; i < d_gate_pre.size(); ++i) {
            const double g = cache.gate.data[i];
            d_gate_pre.data[i] = grad_out.data[i] * cache.hadamard.data[i] * g * (1.0 - g);
            d_hadamard.data[i] = grad_out.data[i] * g;
        }
        LinearGrads lg = linear_backward(params.mutual_w, cache.hadamard, d_gate_pre);
        grads.w = std::move(lg.w);
        grads.b = std::move(lg.b);
        for (size_t i = 0; i < d_hadamard.size(); ++i) d_hadamard.data[i] += lg.x.data[i];
    } else {
        d_hadamard = grad_out;
    }

    for (int f = 0; f < d_hadamard.rows; ++f) {
        const double* dh = d_hadamard.row(f);
        const double* a = z_as.row(f);
        const double* b = z_ast_frames.row(f);
        double* da = grads.z_as.row(f);
        double* db = grads.z_ast_frames.row(f);
        for (int c = 0; c < d; ++c) {
            grads.z_ta[c] += dh[c] * a[c] * b[c];
            da[c] = dh[c] * z_ta[c] * b[c];
            db[c] = dh[c] * z_ta[c] * a[c];
        }
    }
    return grads;
}

Tensor2 classify_frames(const Tensor2& z_ma, const FusionParams& params) {
    return linear(params.head_w, params.head_b, z_ma);
}

Tensor2 pool_segment_logits(const Tensor2& logits, const SegmentBoundaries& boundaries) {
    check_coverage(boundaries, logits.rows);
    Tensor2 out(static_cast<int>(boundaries.size()), logits.cols);
    for (size_t s = 0; s < boundaries.size(); ++s) {
        double* dst = out.row(static_cast<int>(s));
        for (int f = boundaries[s].start; f < boundaries[s].end; ++f) {
            const double* src = logits.row(f);
            for (int c = 0; c < logits.cols; ++c) dst[c] += src[c];
        }
        const double len = static_cast<double>(boundaries[s].length());
        for (int c = 0; c < logits.cols; ++c) dst[c] /= len;
    }
    return out;
}

Tensor2 pool_segment_logits_backward(const Tensor2& grad_segments, const SegmentBoundaries& boundaries,
                                     int num_frames) {
    check_coverage(boundaries, num_frames);
    require(static_cast<int>(boundaries.size()) == grad_segments.rows,
            "pool_segment_logits_backward: boundary count != segment count");
    Tensor2 out(num_frames, grad_segments.cols);
    for (int s = 0; s < grad_segments.rows; ++s) {
        const double* src = grad_segments.row(s);
        const double len = static_cast<double>(boundaries[s].length());
        for (int f = boundaries[s].start; f < boundaries[s].end; ++f) {
            double* dst = out.row(f);
            for (int c = 0; c < grad_segments.cols; ++c) dst[c] = src[c] / len;
        }
    }
    return out;
}

} // namespace querysum
