#pragma once

// Forward and backward passes of the transformer building blocks. Activations are
// row-major matrices with one token per row; several sequences are stacked vertically
// and described by Segments when a block has to respect sequence boundaries.

#include <cmath>
#include <limits>
#include <vector>

#include "tensor.hpp"

namespace vtcode::tvtd {

template <class T>
inline constexpr T kMaskedOut = -std::numeric_limits<T>::infinity();

// ---------------------------------------------------------------- linear

template <class T, class In, class W, class B>
void linear_forward(const In& x, const W& w, const B& b, Mat<T>& y) {
    y.noalias() = x * w;
    y.rowwise() += b.row(0);
}

/// Accumulates dW, db; writes (or adds to) dx when requested.
template <class T, class In, class W, class DW, class DB>
void linear_backward(const In& x, const W& w, const Mat<T>& dy, DW&& dw, DB&& db, Mat<T>* dx, bool accumulate_dx) {
    dw.noalias() += x.transpose() * dy;
    db.row(0) += dy.colwise().sum();
    if (dx) {
        if (accumulate_dx)
            dx->noalias() += dy * w.transpose();
        else
            dx->noalias() = dy * w.transpose();
    }
}

// ---------------------------------------------------------------- layer norm

template <class T>
struct LayerNormCache {
    Mat<T> xhat;
    std::vector<T> rstd;
};

template <class T>
inline constexpr T kLayerNormEps = T(1e-5);

template <class T, class G, class B>
void layernorm_forward(const Mat<T>& x, const G& gain, const B& bias, Mat<T>& y, LayerNormCache<T>* cache) {
    const auto rows = x.rows();
    const auto d = x.cols();
    y.resize(rows, d);
    if (cache) {
        cache->xhat.resize(rows, d);
        cache->rstd.resize(static_cast<std::size_t>(rows));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const T mean = x.row(r).mean();
        const T var = (x.row(r).array() - mean).square().mean();
        const T rstd = T(1) / std::sqrt(var + kLayerNormEps<T>);
        auto xh = (x.row(r).array() - mean) * rstd;
        y.row(r) = (xh * gain.row(0).array() + bias.row(0).array()).matrix();
        if (cache) {
            cache->xhat.row(r) = xh.matrix();
            cache->rstd[static_cast<std::size_t>(r)] = rstd;
        }
    }
}

/// dx is overwritten when accumulate is false, otherwise added to.
template <class T, class G, class DG, class DB>
void layernorm_backward(const LayerNormCache<T>& cache, const G& gain, const Mat<T>& dy, DG&& dgain, DB&& dbias,
                        Mat<T>& dx, bool accumulate) {
    const auto rows = dy.rows();
    const auto d = static_cast<T>(dy.cols());
    dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbias.row(0) += dy.colwise().sum();
    if (!accumulate) dx.setZero(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto dxh = (dy.row(r).array() * gain.row(0).array()).eval();
        const T mean_dxh = dxh.sum() / d;
        const T mean_dxh_xh = (dxh * cache.xhat.row(r).array()).sum() / d;
        dx.row(r).array() +=
            cache.rstd[static_cast<std::size_t>(r)] * (dxh - mean_dxh - cache.xhat.row(r).array() * mean_dxh_xh);
    }
}

// ---------------------------------------------------------------- GELU (tanh form)

template <class T>
T gelu(T x) {
    const T c = T(0.7978845608028654);  // sqrt(2 / pi)
    return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <class T>
T gelu_grad(T x) {
    const T c = T(0.7978845608028654);
    const T inner = c * (x + T(0.044715) * x * x * x);
    const T th = std::tanh(inner);
    return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * c * (T(1) + T(3) * T(0.044715) * x * x);
}

// ---------------------------------------------------------------- attention

/// Sequence boundaries for stacked queries and keys: sequence i owns query rows
/// [q_off[i], q_off[i] + q_len[i]) and key rows [k_off[i], k_off[i] + k_len[i]).
struct Segments {
    std::vector<std::size_t> q_off, q_len, k_off, k_len;
    [[nodiscard]] std::size_t count() const noexcept { return q_off.size(); }
};

/// Row softmax of scores that may hold -inf entries. Every row needs one finite entry.
template <class T>
void softmax_rows(Mat<T>& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const T mx = s.row(r).maxCoeff();
        // Vectorized exp flushes -inf to a denormal rather than 0, so masked entries are
        // zeroed explicitly.
        s.row(r) = (s.row(r).array() == kMaskedOut<T>).select(T(0), (s.row(r).array() - mx).exp()).matrix();
        s.row(r) /= s.row(r).sum();
    }
}

template <class T>
struct AttentionCache {
    std::vector<Mat<T>> probs;  // [sequence * heads + head]
};

/// O = softmax(Q K^T / sqrt(d_head) + mask) V per sequence and head. The mask, if given,
/// is indexed by (query index, key index) within the sequence.
template <class T>
void attention_forward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const Segments& seg, std::size_t heads,
                       const Mat<T>* mask, Mat<T>& out, AttentionCache<T>* cache) {
    const auto d = q.cols();
    const auto dh = d / static_cast<Eigen::Index>(heads);
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    out.resize(q.rows(), d);
    if (cache) cache->probs.resize(seg.count() * heads);
    Mat<T> s;
    for (std::size_t i = 0; i < seg.count(); ++i) {
        const auto qo = static_cast<Eigen::Index>(seg.q_off[i]), ql = static_cast<Eigen::Index>(seg.q_len[i]);
        const auto ko = static_cast<Eigen::Index>(seg.k_off[i]), kl = static_cast<Eigen::Index>(seg.k_len[i]);
        for (std::size_t h = 0; h < heads; ++h) {
            const auto c0 = static_cast<Eigen::Index>(h) * dh;
            s.noalias() = q.block(qo, c0, ql, dh) * k.block(ko, c0, kl, dh).transpose();
            s *= scale;
            if (mask) s += mask->topLeftCorner(ql, kl);
            softmax_rows(s);
            out.block(qo, c0, ql, dh).noalias() = s * v.block(ko, c0, kl, dh);
            if (cache) cache->probs[i * heads + h] = s;
        }
    }
}

/// Given dO, accumulates into dq, dk, dv (which must be pre-sized).
template <class T>
void attention_backward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const Segments& seg, std::size_t heads,
                        const AttentionCache<T>& cache, const Mat<T>& dout, Mat<T>& dq, Mat<T>& dk, Mat<T>& dv) {
    const auto d = q.cols();
    const auto dh = d / static_cast<Eigen::Index>(heads);
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Mat<T> dp, ds;
    for (std::size_t i = 0; i < seg.count(); ++i) {
        const auto qo = static_cast<Eigen::Index>(seg.q_off[i]), ql = static_cast<Eigen::Index>(seg.q_len[i]);
        const auto ko = static_cast<Eigen::Index>(seg.k_off[i]), kl = static_cast<Eigen::Index>(seg.k_len[i]);
        for (std::size_t h = 0; h < heads; ++h) {
            const auto c0 = static_cast<Eigen::Index>(h) * dh;
            const Mat<T>& p = cache.probs[i * heads + h];
            const auto dO = dout.block(qo, c0, ql, dh);
            dv.block(ko, c0, kl, dh).noalias() += p.transpose() * dO;
            dp.noalias() = dO * v.block(ko, c0, kl, dh).transpose();
            // Softmax Jacobian: ds = p * (dp - rowsum(dp * p)).
            ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            ds *= scale;
            dq.block(qo, c0, ql, dh).noalias() += ds * k.block(ko, c0, kl, dh);
            dk.block(ko, c0, kl, dh).noalias() += ds.transpose() * q.block(qo, c0, ql, dh);
        }
    }
}

}  // namespace vtcode::tvtd
