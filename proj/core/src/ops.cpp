#include "querysum/ops.hpp"

#include <algorithm>
#include <cmath>

namespace querysum {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    require(a.cols == b.rows, "matmul: inner dimensions disagree");
    Tensor2 out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* or_ = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = ar[k];
            if (av == 0.0) continue;
            const double* br = b.row(k);
            for (int j = 0; j < b.cols; ++j) or_[j] += av * br[j];
        }
    }
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    require(a.cols == b.cols, "matmul_nt: inner dimensions disagree");
    Tensor2 out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* or_ = out.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* br = b.row(j);
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += ar[k] * br[k];
            or_[j] = acc;
        }
    }
    return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    require(a.rows == b.rows, "matmul_tn: inner dimensions disagree");
    Tensor2 out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* ar = a.row(k);
        const double* br = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double av = ar[i];
            if (av == 0.0) continue;
            double* or_ = out.row(i);
            for (int j = 0; j < b.cols; ++j) or_[j] += av * br[j];
        }
    }
    return out;
}

Tensor2 linear(const Tensor2& w, const Vec& b, const Tensor2& x) {
    require(x.cols == w.cols, "linear: inner dimensions disagree (" + std::to_string(x.cols) +
                                  " vs " + std::to_string(w.cols) + ")");
    require(static_cast<int>(b.size()) == w.rows, "linear: bias length does not match output size");
    Tensor2 out(x.rows, w.rows);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double* or_ = out.row(r);
        for (int o = 0; o < w.rows; ++o) {
            const double* wr = w.row(o);
            double acc = b[o];
            for (int i = 0; i < x.cols; ++i) acc += xr[i] * wr[i];
            or_[o] = acc;
        }
    }
    return out;
}

LinearGrads linear_backward(const Tensor2& w, const Tensor2& x, const Tensor2& grad_out) {
    require(grad_out.rows == x.rows && grad_out.cols == w.rows, "linear_backward: grad shape mismatch");
    LinearGrads g;
    g.w = Tensor2(w.rows, w.cols);
    g.b = Vec(w.rows, 0.0);
    g.x = Tensor2(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        const double* gr = grad_out.row(r);
        double* gxr = g.x.row(r);
        for (int o = 0; o < w.rows; ++o) {
            const double go = gr[o];
            if (go == 0.0) continue;
            g.b[o] += go;
            double* gwr = g.w.row(o);
            const double* wr = w.row(o);
            for (int i = 0; i < x.cols; ++i) {
                gwr[i] += go * xr[i];
                gxr[i] += go * wr[i];
            }
        }
    }
    return g;
}

Tensor2 softmax_rows(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double* or_ = out.row(r);
        double mx = xr[0];
        for (int c = 1; c < x.cols; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            or_[c] = std::exp(xr[c] - mx);
            sum += or_[c];
        }
        for (int c = 0; c < x.cols; ++c) or_[c] /= sum;
    }
    return out;
}

Tensor2 softmax_rows_backward(const Tensor2& softmax_out, const Tensor2& grad_out) {
    require(softmax_out.same_shape(grad_out), "softmax_rows_backward: shape mismatch");
    Tensor2 gx(softmax_out.rows, softmax_out.cols);
    for (int r = 0; r < softmax_out.rows; ++r) {
        const double* s = softmax_out.row(r);
        const double* g = grad_out.row(r);
        double dot = 0.0;
        for (int c = 0; c < softmax_out.cols; ++c) dot += s[c] * g[c];
        double* gr = gx.row(r);
        for (int c = 0; c < softmax_out.cols; ++c) gr[c] = s[c] * (g[c] - dot);
    }
    return gx;
}

Vec layer_norm(const Vec& x, const Vec& gain, const Vec& bias) {
    require(x.size() >= 2, "layer_norm: input length must be >= 2");
    require(x.size() == gain.size() && x.size() == bias.size(), "layer_norm: gain/bias length mismatch");
    Tensor2 row(1, static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), row.data.begin());
    Tensor2 out = layer_norm_rows(row, gain, bias);
    return out.data;
}

Tensor2 layer_norm_rows(const Tensor2& x, const Vec& gain, const Vec& bias, LayerNormCache* cache) {
    require(x.cols >= 2, "layer_norm_rows: row length must be >= 2");
    require(static_cast<int>(gain.size()) == x.cols && static_cast<int>(bias.size()) == x.cols,
            "layer_norm_rows: gain/bias length mismatch");
    Tensor2 out(x.rows, x.cols);
    if (cache) {
        cache->normalized = Tensor2(x.rows, x.cols);
        cache->inv_std.assign(x.rows, 0.0);
    }
    const double n = static_cast<double>(x.cols);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double mean = 0.0;
        for (int c = 0; c < x.cols; ++c) mean += xr[c];
        mean /= n;
        double var = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            const double d = xr[c] - mean;
            var += d * d;
        }
        var /= n;
        const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        double* or_ = out.row(r);
        for (int c = 0; c < x.cols; ++c) {
            const double xhat = (xr[c] - mean) * inv_std;
            or_[c] = gain[c] * xhat + bias[c];
            if (cache) cache->normalized.at(r, c) = xhat;
        }
        if (cache) cache->inv_std[r] = inv_std;
    }
    return out;
}

LayerNormGrads layer_norm_rows_backward(const LayerNormCache& cache, const Vec& gain, const Tensor2& grad_out) {
    const Tensor2& xhat = cache.normalized;
    require(xhat.same_shape(grad_out), "layer_norm_rows_backward: shape mismatch");
    LayerNormGrads g;
    g.x = Tensor2(xhat.rows, xhat.cols);
    g.gain.assign(xhat.cols, 0.0);
    g.bias.assign(xhat.cols, 0.0);
    const double n = static_cast<double>(xhat.cols);
    for (int r = 0; r < xhat.rows; ++r) {
        const double* go = grad_out.row(r);
        const double* xh = xhat.row(r);
        double sum_gy = 0.0;    // sum of dL/dxhat
        double sum_gy_xh = 0.0; // sum of dL/dxhat * xhat
        for (int c = 0; c < xhat.cols; ++c) {
            const double gy = go[c] * gain[c];
            sum_gy += gy;
            sum_gy_xh += gy * xh[c];
            g.gain[c] += go[c] * xh[c];
            g.bias[c] += go[c];
        }
        double* gx = g.x.row(r);
        const double inv_std = cache.inv_std[r];
        for (int c = 0; c < xhat.cols; ++c) {
            const double gy = go[c] * gain[c];
            gx[c] = inv_std * (gy - sum_gy / n - xh[c] * sum_gy_xh / n);
        }
    }
    return g;
}

Tensor2 relu(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    return out;
}

Tensor2 relu_backward(const Tensor2& pre_activation, const Tensor2& grad_out) {
    require(pre_activation.same_shape(grad_out), "relu_backward: shape mismatch");
    Tensor2 gx(grad_out.rows, grad_out.cols);
    for (size_t i = 0; i < gx.size(); ++i) {
        gx.data[i] = pre_activation.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    }
    return gx;
}

Tensor2 sigmoid(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
    return out;
}

Vec sigmoid(const Vec& x) {
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return out;
}

CrossEntropy cross_entropy(const Tensor2& logits, const std::vector<int>& labels) {
    require(static_cast<int>(labels.size()) == logits.rows, "cross_entropy: one label per logits row required");
    const int n = logits.rows;
    const int c = logits.cols;
    for (int i = 0; i < n; ++i) {
        require(labels[i] >= 1 && labels[i] <= c,
                "cross_entropy: label " + std::to_string(labels[i]) + " outside [1, " + std::to_string(c) + "]");
    }
    CrossEntropy result;
    result.probs = softmax_rows(logits);
    result.grad_logits = Tensor2(n, c);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* lr = logits.row(i);
        double mx = lr[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, lr[j]);
        double lse = 0.0;
        for (int j = 0; j < c; ++j) lse += std::exp(lr[j] - mx);
        lse = mx + std::log(lse);
        loss += lse - lr[labels[i] - 1]; // -log p[label] via log-sum-exp
        const double* pr = result.probs.row(i);
        double* gr = result.grad_logits.row(i);
        for (int j = 0; j < c; ++j) gr[j] = pr[j] / n;
        gr[labels[i] - 1] -= 1.0 / n;
    }
    result.loss = loss / n;
    return result;
}

} // namespace querysum
