#pragma once

// Greedy autoregressive decoding with per-layer key/value caches. Each step feeds one new
// decoder slot per word; self-attention only reads the cached keys inside the window, so
// a step costs O(w d) attention work regardless of how far decoding has progressed.

#include <algorithm>
#include <span>

#include "model.hpp"

namespace vtcode::tvtd {

struct GreedyResult {
    BitWord decoded;
    std::vector<double> p_one;  // softmax probability of bit 1 at every position
};

struct StepCounters {
    std::size_t steps = 0;
    std::size_t attended_keys = 0;  // self-attention keys read, summed over steps, layers and words
};

template <class T>
class GreedyDecoder {
public:
    explicit GreedyDecoder(const TvtdModel<T>& model) : m_(model) {}

    /// Decodes every corrupted word in lockstep and returns one result per word.
    std::vector<GreedyResult> decode(std::span<const BitWord> corrupted, StepCounters* counters = nullptr) const {
        const auto& cfg = m_.config();
        const std::size_t B = corrupted.size();
        const std::size_t n = cfg.n, d = cfg.d_model, heads = cfg.n_heads, dh = cfg.head_dim();
        const std::size_t w = cfg.window;
        std::vector<GreedyResult> out(B);
        if (B == 0) return out;

        std::vector<TrainingPair> mem_batch(B);
        for (std::size_t b = 0; b < B; ++b) mem_batch[b].corrupted = corrupted[b];
        typename TvtdModel<T>::Cache mc;
        m_.embed_memory(mem_batch, mc);
        m_.encode_memory(mc);

        const auto& layers = m_.decoder_layers();
        const std::size_t L = layers.size();
        std::vector<Mat<T>> cross_k(L), cross_v(L);
        for (std::size_t l = 0; l < L; ++l) {
            linear_forward<T>(mc.memory, m_.V(layers[l].cross.wk), m_.V(layers[l].cross.bk), cross_k[l]);
            linear_forward<T>(mc.memory, m_.V(layers[l].cross.wv), m_.V(layers[l].cross.bv), cross_v[l]);
        }
        // Self-attention cache: ring buffer of the last w + 1 keys/values per word and layer.
        const std::size_t ring = std::min(w + 1, n);
        std::vector<Mat<T>> self_k(L, Mat<T>::Zero(static_cast<Eigen::Index>(B * ring), static_cast<Eigen::Index>(d)));
        std::vector<Mat<T>> self_v = self_k;

        std::vector<std::size_t> s0(B, 0), s1(B, 0);
        for (auto& r : out) {
            r.decoded = BitWord(std::vector<std::uint8_t>(n, 0));
            r.p_one.assign(n, 0.0);
        }
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        Mat<T> x(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d)), z, q, k, v, o, a, u, g, f, logits;
        LayerNormCache<T>* no_cache = nullptr;
        Vec<T> scores;

        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t b = 0; b < B; ++b) {
                std::size_t sym = TvtdModel<T>::kStartSlot;
                if (t > 0) {
                    const int bit = out[b].decoded[t - 1];
                    (bit ? s1[b] : s0[b]) += t;
                    sym = symbol_row(t, bit);
                }
                x.row(static_cast<Eigen::Index>(b)) = m_.target_input_row(sym, s0[b], s1[b]);
            }
            const std::size_t first = t > w ? t - w : 0;
            for (std::size_t l = 0; l < L; ++l) {
                const auto& Ly = layers[l];
                layernorm_forward<T>(x, m_.V(Ly.ln1.g), m_.V(Ly.ln1.b), z, no_cache);
                linear_forward<T>(z, m_.V(Ly.self.wq), m_.V(Ly.self.bq), q);
                linear_forward<T>(z, m_.V(Ly.self.wk), m_.V(Ly.self.bk), k);
                linear_forward<T>(z, m_.V(Ly.self.wv), m_.V(Ly.self.bv), v);
                for (std::size_t b = 0; b < B; ++b) {
                    const auto slot = static_cast<Eigen::Index>(b * ring + t % ring);
                    self_k[l].row(slot) = k.row(static_cast<Eigen::Index>(b));
                    self_v[l].row(slot) = v.row(static_cast<Eigen::Index>(b));
                }
                o.setZero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
                for (std::size_t b = 0; b < B; ++b) {
                    for (std::size_t h = 0; h < heads; ++h) {
                        const auto c0 = static_cast<Eigen::Index>(h * dh);
                        const auto qh = q.row(static_cast<Eigen::Index>(b)).segment(c0, static_cast<Eigen::Index>(dh));
                        scores.resize(static_cast<Eigen::Index>(t - first + 1));
                        for (std::size_t j = first; j <= t; ++j) {
                            const auto slot = static_cast<Eigen::Index>(b * ring + j % ring);
                            scores(static_cast<Eigen::Index>(j - first)) =
                                scale * qh.dot(self_k[l].row(slot).segment(c0, static_cast<Eigen::Index>(dh)));
                        }
                        softmax_inplace(scores);
                        for (std::size_t j = first; j <= t; ++j) {
                            const auto slot = static_cast<Eigen::Index>(b * ring + j % ring);
                            o.row(static_cast<Eigen::Index>(b)).segment(c0, static_cast<Eigen::Index>(dh)) +=
                                scores(static_cast<Eigen::Index>(j - first)) *
                                self_v[l].row(slot).segment(c0, static_cast<Eigen::Index>(dh));
                        }
                    }
                    if (counters) counters->attended_keys += t - first + 1;
                }
                linear_forward<T>(o, m_.V(Ly.self.wo), m_.V(Ly.self.bo), a);
                x += a;

                layernorm_forward<T>(x, m_.V(Ly.ln2.g), m_.V(Ly.ln2.b), z, no_cache);
                linear_forward<T>(z, m_.V(Ly.cross.wq), m_.V(Ly.cross.bq), q);
                o.setZero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
                for (std::size_t b = 0; b < B; ++b) {
                    const auto ko = static_cast<Eigen::Index>(mc.cross.k_off[b]);
                    const auto kl = static_cast<Eigen::Index>(mc.cross.k_len[b]);
                    for (std::size_t h = 0; h < heads; ++h) {
                        const auto c0 = static_cast<Eigen::Index>(h * dh);
                        const auto dhi = static_cast<Eigen::Index>(dh);
                        scores.noalias() = q.row(static_cast<Eigen::Index>(b)).segment(c0, dhi) *
                                           cross_k[l].block(ko, c0, kl, dhi).transpose();
                        scores *= scale;
                        softmax_inplace(scores);
                        o.row(static_cast<Eigen::Index>(b)).segment(c0, dhi).noalias() =
                            scores * cross_v[l].block(ko, c0, kl, dhi);
                    }
                }
                linear_forward<T>(o, m_.V(Ly.cross.wo), m_.V(Ly.cross.bo), a);
                x += a;

                layernorm_forward<T>(x, m_.V(Ly.ln3.g), m_.V(Ly.ln3.b), z, no_cache);
                linear_forward<T>(z, m_.V(Ly.ff.w1), m_.V(Ly.ff.b1), u);
                g = u.unaryExpr([](T val) { return gelu(val); });
                linear_forward<T>(g, m_.V(Ly.ff.w2), m_.V(Ly.ff.b2), f);
                x += f;
            }
            layernorm_forward<T>(x, m_.V(m_.output_norm().g), m_.V(m_.output_norm().b), z, no_cache);
            linear_forward<T>(z, m_.V(m_.output_weight()), m_.V(m_.output_bias()), logits);
            for (std::size_t b = 0; b < B; ++b) {
                const T l0 = logits(static_cast<Eigen::Index>(b), 0), l1 = logits(static_cast<Eigen::Index>(b), 1);
                out[b].decoded.set_bit(t + 1, l1 > l0 ? 1 : 0);
                out[b].p_one[t] = 1.0 / (1.0 + std::exp(static_cast<double>(l0 - l1)));
            }
            if (counters) ++counters->steps;
        }
        return out;
    }

    GreedyResult decode(const BitWord& corrupted) const {
        return std::move(decode(std::span<const BitWord>(&corrupted, 1)).front());
    }

private:
    static void softmax_inplace(Vec<T>& s) {
        const T mx = s.maxCoeff();
        s = (s.array() - mx).exp().matrix();
        s /= s.sum();
    }

    const TvtdModel<T>& m_;
};

}  // namespace vtcode::tvtd
