#pragma once

#include "querysum/pseudo_label.hpp"
#include "querysum/tensor.hpp"

namespace querysum {

/// Learnable blocks of the visual/mutual attention stage and the
/// frame classifier head. `mutual_w`/`mutual_b` are empty when the
/// mutual-attention ablation is off (the gate becomes an identity
/// pass-through of the Hadamard product).
struct FusionParams {
    Tensor2 frame_gate_w;   // [d x d]
    Vec frame_gate_b;       // [d]
    Tensor2 segment_gate_w; // [d x d]
    Vec segment_gate_b;     // [d]
    Tensor2 mutual_w;       // [d x d]
    Vec mutual_b;           // [d]
    Tensor2 head_w;         // [C x d]
    Vec head_b;             // [C]
};

/// Per row f: sigmoid(f W^T + b) ⊙ f. The sigmoid gate values are written
/// to `gate_cache` when given (needed for the backward pass).
Tensor2 visual_attention(const Tensor2& features, const Tensor2& gate_w, const Vec& gate_b,
                         Tensor2* gate_cache = nullptr);

struct VisualAttentionGrads {
    Tensor2 w;
    Vec b;
    Tensor2 features;
};

VisualAttentionGrads visual_attention_backward(const Tensor2& features, const Tensor2& gate_w,
                                               const Tensor2& gate_cache, const Tensor2& grad_out);

/// Every frame receives its enclosing segment's row. Boundaries must cover
/// [0, num_frames) exactly.
Tensor2 broadcast_segments(const Tensor2& segment_rows, const SegmentBoundaries& boundaries, int num_frames);

/// Adds per-frame gradients back onto segment rows.
Tensor2 broadcast_segments_backward(const Tensor2& grad_frames, const SegmentBoundaries& boundaries,
                                    int num_segments);

struct MutualAttentionCache {
    Tensor2 hadamard; // z_ta ⊙ z_as ⊙ z_ast per frame
    Tensor2 gate;     // sigmoid gate, empty when mutual attention is disabled
};

/// Per frame: H = z_ta ⊙ z_as[frame] ⊙ z_ast_frames[frame], then the 1x1
/// convolutional attention z_ma = sigmoid(H W_m^T + b_m) ⊙ H. With
/// `use_gate` false the result is H itself.
Tensor2 mutual_attention(const Vec& z_ta, const Tensor2& z_as, const Tensor2& z_ast_frames,
                         const FusionParams& params, bool use_gate, MutualAttentionCache* cache = nullptr);

struct MutualAttentionGrads {
    Tensor2 w;
    Vec b;
    Vec z_ta;
    Tensor2 z_as;
    Tensor2 z_ast_frames;
};

MutualAttentionGrads mutual_attention_backward(const Vec& z_ta, const Tensor2& z_as, const Tensor2& z_ast_frames,
                                               const FusionParams& params, bool use_gate,
                                               const MutualAttentionCache& cache, const Tensor2& grad_out);

/// Per-frame linear map to C logits.
Tensor2 classify_frames(const Tensor2& z_ma, const FusionParams& params);

/// Mean of member-frame logits per segment (pretext-task prediction).
Tensor2 pool_segment_logits(const Tensor2& logits, const SegmentBoundaries& boundaries);

/// Distributes segment-level gradients evenly over member frames.
Tensor2 pool_segment_logits_backward(const Tensor2& grad_segments, const SegmentBoundaries& boundaries,
                                     int num_frames);

} // namespace querysum
