#pragma once

// Transformer VT decoder (TVTD).
//
// The corrupted word is embedded (statistic pair followed by per-position symbol vectors)
// and layer-normalized; that matrix is the memory every decoder layer cross-attends to.
// An optional stack of encoder layers can sit in front of the normalization.
//
// The decoder predicts the transmitted word one bit at a time. Its input at slot t
// (0-based, t < n) is a start vector for t = 0 and the symbol embedding of bit c_t for
// t >= 1, plus the statistic embedding of the prefix c_1..c_t. Every layer is
// pre-normalized: masked self-attention, cross-attention, feed-forward, each added to the
// residual stream. Slot t emits two logits for bit c_{t+1}.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "../random.hpp"
#include "config.hpp"
#include "embedding.hpp"
#include "layers.hpp"
#include "mask.hpp"

namespace vtcode::tvtd {

struct TrainingPair {
    BitWord corrupted;
    BitWord target;  // transmitted codeword, length n
};

template <class T>
class TvtdModel {
public:
    struct LnSlots {
        Slot g, b;
    };
    struct AttnSlots {
        Slot wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct FfSlots {
        Slot w1, b1, w2, b2;
    };
    struct EncoderLayer {
        LnSlots ln1;
        AttnSlots self;
        LnSlots ln2;
        FfSlots ff;
    };
    struct DecoderLayer {
        LnSlots ln1;
        AttnSlots self;
        LnSlots ln2;
        AttnSlots cross;
        LnSlots ln3;
        FfSlots ff;
    };

    explicit TvtdModel(const TvtdConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        build_layout();
        values_.assign(layout_.total(), T(0));
        initialize(cfg_.seed);
        self_mask_ = build_masks<T>(cfg_.n, cfg_.window);
    }

    [[nodiscard]] const TvtdConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] Buffer<T>& values() noexcept { return values_; }
    [[nodiscard]] const Buffer<T>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return layout_.total(); }
    [[nodiscard]] const std::vector<EncoderLayer>& encoder_layers() const noexcept { return enc_; }
    [[nodiscard]] const std::vector<DecoderLayer>& decoder_layers() const noexcept { return dec_; }
    [[nodiscard]] const Mat<T>& self_mask() const noexcept { return self_mask_; }

    [[nodiscard]] EmbeddingTables<T> memory_tables() const {
        return {&values_, mem_sym_, mem_stat0_, mem_stat1_, cfg_.stat_memory};
    }
    [[nodiscard]] EmbeddingTables<T> target_tables() const {
        return {&values_, tgt_sym_, tgt_stat0_, tgt_stat1_, cfg_.stat_target};
    }
    [[nodiscard]] const Slot& start_slot() const noexcept { return start_; }
    [[nodiscard]] const LnSlots& memory_norm() const noexcept { return mem_ln_; }
    [[nodiscard]] const LnSlots& output_norm() const noexcept { return out_ln_; }
    [[nodiscard]] const Slot& output_weight() const noexcept { return out_w_; }
    [[nodiscard]] const Slot& output_bias() const noexcept { return out_b_; }

    /// Re-draws every parameter from the seeded initializer.
    void initialize(std::uint64_t seed) {
        Rng rng(splitmix64(seed ^ 0x7476746Dull));
        auto normal = [&rng]() {
            // Box-Muller on the portable uniform draws.
            const double u1 = 1.0 - uniform01(rng);
            const double u2 = uniform01(rng);
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        };
        auto fill = [&](const Slot& s, double stddev) {
            for (std::size_t i = 0; i < s.size(); ++i) values_[s.offset + i] = static_cast<T>(stddev * normal());
        };
        auto ones = [&](const Slot& s) { view(values_, s).setOnes(); };
        const double depth_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg_.n_layers + cfg_.encoder_layers));
        std::fill(values_.begin(), values_.end(), T(0));
        for (const auto& b : layout_.blobs()) {
            const std::string& name = b.name;
            const auto ends_with = [&](const char* suffix) {
                const std::string s(suffix);
                return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
            };
            if (ends_with(".g"))
                ones(b.slot);
            else if (name.rfind("mem.emb", 0) == 0 || name.rfind("tgt.", 0) == 0)
                fill(b.slot, 1.0);
            else if (ends_with(".wo") || ends_with(".w2"))
                fill(b.slot, depth_scale / std::sqrt(static_cast<double>(b.slot.rows)));
            else if (ends_with(".wq") || ends_with(".wk") || ends_with(".wv") || ends_with(".w1") || name == "out.w")
                fill(b.slot, 1.0 / std::sqrt(static_cast<double>(b.slot.rows)));
            // biases stay zero
        }
    }

    // ------------------------------------------------------------------ forward / backward

    struct AttnCache {
        Mat<T> q, k, v, o;
        AttentionCache<T> att;
    };
    struct EncoderCache {
        Mat<T> x_in, z1, x1, z2, u, g;
        LayerNormCache<T> ln1, ln2;
        AttnCache self;
    };
    struct DecoderCache {
        Mat<T> x_in, z1, x1, z2, x2, z3, u, g;
        LayerNormCache<T> ln1, ln2, ln3;
        AttnCache self, cross;
    };
    struct Cache {
        std::size_t batch = 0;
        Segments dec_self, cross, enc_self;
        // Table rows gathered into the stacked inputs, for the gradient scatter.
        std::vector<std::size_t> mem_sym_rows, mem_stat0_rows, mem_stat1_rows;
        std::vector<std::size_t> mem_row_of_sym;  // memory row that holds each symbol gather
        std::vector<std::size_t> tgt_sym_rows;    // -1 marks the start slot
        std::vector<std::size_t> tgt_stat0_rows, tgt_stat1_rows;
        Mat<T> mem_embed, mem_pre_norm, memory;
        LayerNormCache<T> mem_ln;
        std::vector<EncoderCache> enc;
        std::vector<DecoderCache> dec;
        Mat<T> x_final, z_out, logits;
        LayerNormCache<T> out_ln;
    };

    static constexpr std::size_t kStartSlot = static_cast<std::size_t>(-1);

    /// Stacked memory embedding for a batch of corrupted words, with gather bookkeeping.
    void embed_memory(std::span<const TrainingPair> batch, Cache& c) const {
        const auto tables = memory_tables();
        const std::size_t d = cfg_.d_model;
        std::size_t total = 0;
        c.cross = {};
        c.enc_self = {};
        for (const auto& p : batch) {
            if (p.corrupted.size() > cfg_.max_received())
                throw LengthOverflow("TvtdModel: corrupted word longer than n + max_drift");
            const std::size_t len = p.corrupted.size() + (cfg_.stat_memory ? 2 : 0);
            if (len == 0) throw LengthOverflow("TvtdModel: empty memory (empty word without statistics)");
            c.cross.k_off.push_back(total);
            c.cross.k_len.push_back(len);
            total += len;
        }
        c.mem_embed.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
        c.mem_sym_rows.clear();
        c.mem_row_of_sym.clear();
        c.mem_stat0_rows.clear();
        c.mem_stat1_rows.clear();
        const auto sym = view(values_, mem_sym_);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const BitWord& r = batch[b].corrupted;
            std::size_t row_idx = c.cross.k_off[b];
            if (cfg_.stat_memory) {
                const auto sums = position_sums(r);
                if (sums.s0 > tables.stat_max() || sums.s1 > tables.stat_max())
                    throw KeyOverflow("TvtdModel: statistic outside table");
                c.mem_embed.row(static_cast<Eigen::Index>(row_idx++)) = row(values_, mem_stat0_, sums.s0);
                c.mem_embed.row(static_cast<Eigen::Index>(row_idx++)) = row(values_, mem_stat1_, sums.s1);
                c.mem_stat0_rows.push_back(sums.s0);
                c.mem_stat1_rows.push_back(sums.s1);
            }
            for (std::size_t i = 0; i < r.size(); ++i) {
                const std::size_t sr = symbol_row(i + 1, r[i]);
                c.mem_embed.row(static_cast<Eigen::Index>(row_idx)) = sym.row(static_cast<Eigen::Index>(sr));
                c.mem_sym_rows.push_back(sr);
                c.mem_row_of_sym.push_back(row_idx);
                ++row_idx;
            }
        }
        c.enc_self.q_off = c.cross.k_off;
        c.enc_self.q_len = c.cross.k_len;
        c.enc_self.k_off = c.cross.k_off;
        c.enc_self.k_len = c.cross.k_len;
    }

    /// Decoder input rows for teacher-forced slots 0..n-1 of every target word.
    void embed_target(std::span<const TrainingPair> batch, Cache& c, Mat<T>& x) const {
        const std::size_t n = cfg_.n;
        const std::size_t d = cfg_.d_model;
        x.resize(static_cast<Eigen::Index>(batch.size() * n), static_cast<Eigen::Index>(d));
        c.tgt_sym_rows.assign(batch.size() * n, kStartSlot);
        c.tgt_stat0_rows.assign(batch.size() * n, 0);
        c.tgt_stat1_rows.assign(batch.size() * n, 0);
        c.dec_self = {};
        c.cross.q_off.clear();
        c.cross.q_len.clear();
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const BitWord& v = batch[b].target;
            if (v.size() < n - 1) throw LengthError("TvtdModel: target shorter than n - 1");
            c.dec_self.q_off.push_back(b * n);
            c.dec_self.q_len.push_back(n);
            c.dec_self.k_off.push_back(b * n);
            c.dec_self.k_len.push_back(n);
            c.cross.q_off.push_back(b * n);
            c.cross.q_len.push_back(n);
            std::size_t s0 = 0, s1 = 0;
            for (std::size_t t = 0; t < n; ++t) {
                const std::size_t r = b * n + t;
                if (t > 0) {
                    const int bit = v[t - 1];
                    (bit ? s1 : s0) += t;
                    c.tgt_sym_rows[r] = symbol_row(t, bit);
                }
                c.tgt_stat0_rows[r] = s0;
                c.tgt_stat1_rows[r] = s1;
                x.row(static_cast<Eigen::Index>(r)) = target_input_row(c.tgt_sym_rows[r], s0, s1);
            }
        }
    }

    /// Input vector for one decoder slot: start (sym_row == kStartSlot) or symbol gather,
    /// plus the prefix statistics when enabled.
    [[nodiscard]] Vec<T> target_input_row(std::size_t sym_row, std::size_t s0, std::size_t s1) const {
        Vec<T> x = sym_row == kStartSlot ? Vec<T>(row(values_, start_, 0)) : Vec<T>(row(values_, tgt_sym_, sym_row));
        if (cfg_.stat_target) {
            x += row(values_, tgt_stat0_, s0);
            x += row(values_, tgt_stat1_, s1);
        }
        return x;
    }

    /// Runs the memory pipeline (encoder layers, if any, then normalization).
    void encode_memory(Cache& c) const {
        Mat<T> h = c.mem_embed;
        c.enc.resize(enc_.size());
        for (std::size_t l = 0; l < enc_.size(); ++l) encoder_forward(enc_[l], c.enc_self, h, c.enc[l]);
        c.mem_pre_norm = std::move(h);
        layernorm_forward<T>(c.mem_pre_norm, V(mem_ln_.g), V(mem_ln_.b), c.memory, &c.mem_ln);
    }

    /// Teacher-forced logits, (batch * n) x 2; row b * n + t scores bit t + 1 of word b.
    Mat<T> forward(std::span<const TrainingPair> batch, Cache* cache = nullptr) const {
        Cache local;
        Cache& c = cache ? *cache : local;
        c.batch = batch.size();
        embed_memory(batch, c);
        encode_memory(c);
        Mat<T> x;
        embed_target(batch, c, x);
        c.dec.resize(dec_.size());
        for (std::size_t l = 0; l < dec_.size(); ++l) decoder_forward(dec_[l], c, x, c.dec[l]);
        c.x_final = std::move(x);
        layernorm_forward<T>(c.x_final, V(out_ln_.g), V(out_ln_.b), c.z_out, &c.out_ln);
        linear_forward<T>(c.z_out, V(out_w_), V(out_b_), c.logits);
        return c.logits;
    }

    Mat<T> forward(const BitWord& corrupted, const BitWord& target) const {
        const TrainingPair p{corrupted, target};
        return forward(std::span<const TrainingPair>(&p, 1));
    }

    struct LossStats {
        T loss = 0;              // mean per-bit cross-entropy
        std::size_t correct = 0;  // teacher-forced argmax hits
        std::size_t tokens = 0;
    };

    /// Mean cross-entropy over all predicted bits; accumulates its gradient into `grad`
    /// (same layout as values()) when grad is non-null.
    LossStats loss_and_grad(std::span<const TrainingPair> batch, Buffer<T>* grad) const {
        Cache c;
        const Mat<T> logits = forward(batch, &c);
        const std::size_t n = cfg_.n;
        const std::size_t rows = batch.size() * n;
        LossStats st;
        st.tokens = rows;
        Mat<T> dlogits(static_cast<Eigen::Index>(rows), 2);
        double total = 0;
        for (std::size_t b = 0; b < batch.size(); ++b)
            for (std::size_t t = 0; t < n; ++t) {
                const auto r = static_cast<Eigen::Index>(b * n + t);
                const int y = batch[b].target[t];
                const T l0 = logits(r, 0), l1 = logits(r, 1);
                const T mx = std::max(l0, l1);
                const T lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
                total += static_cast<double>(lse - (y ? l1 : l0));
                const int pred = l1 > l0 ? 1 : 0;
                st.correct += pred == y;
                const T p1 = std::exp(l1 - lse);
                const T p0 = std::exp(l0 - lse);
                dlogits(r, 0) = (p0 - (y == 0 ? T(1) : T(0))) / static_cast<T>(rows);
                dlogits(r, 1) = (p1 - (y == 1 ? T(1) : T(0))) / static_cast<T>(rows);
            }
        st.loss = static_cast<T>(total / static_cast<double>(rows));
        if (grad) backward(c, dlogits, *grad);
        return st;
    }

    void backward(const Cache& c, const Mat<T>& dlogits, Buffer<T>& grad) const {
        if (grad.size() != values_.size()) grad.assign(values_.size(), T(0));
        Mat<T> dz, dx;
        linear_backward<T>(c.z_out, V(out_w_), dlogits, G(grad, out_w_), G(grad, out_b_), &dz, false);
        layernorm_backward<T>(c.out_ln, V(out_ln_.g), dz, G(grad, out_ln_.g), G(grad, out_ln_.b), dx, false);
        Mat<T> dmem = Mat<T>::Zero(c.memory.rows(), c.memory.cols());
        for (std::size_t l = dec_.size(); l-- > 0;) decoder_backward(dec_[l], c, c.dec[l], dx, dmem, grad);
        // dx now holds the gradient of the decoder input rows.
        for (std::size_t r = 0; r < c.tgt_sym_rows.size(); ++r) {
            const auto dr = dx.row(static_cast<Eigen::Index>(r));
            if (c.tgt_sym_rows[r] == kStartSlot)
                row(grad, start_, 0) += dr;
            else
                row(grad, tgt_sym_, c.tgt_sym_rows[r]) += dr;
            if (cfg_.stat_target) {
                row(grad, tgt_stat0_, c.tgt_stat0_rows[r]) += dr;
                row(grad, tgt_stat1_, c.tgt_stat1_rows[r]) += dr;
            }
        }
        Mat<T> dh;
        layernorm_backward<T>(c.mem_ln, V(mem_ln_.g), dmem, G(grad, mem_ln_.g), G(grad, mem_ln_.b), dh, false);
        for (std::size_t l = enc_.size(); l-- > 0;) encoder_backward(enc_[l], c.enc_self, c.enc[l], dh, grad);
        for (std::size_t k = 0; k < c.mem_sym_rows.size(); ++k)
            row(grad, mem_sym_, c.mem_sym_rows[k]) += dh.row(static_cast<Eigen::Index>(c.mem_row_of_sym[k]));
        if (cfg_.stat_memory)
            for (std::size_t b = 0; b < c.batch; ++b) {
                const auto off = static_cast<Eigen::Index>(c.cross.k_off[b]);
                row(grad, mem_stat0_, c.mem_stat0_rows[b]) += dh.row(off);
                row(grad, mem_stat1_, c.mem_stat1_rows[b]) += dh.row(off + 1);
            }
    }

    /// Parameter views used by incremental inference.
    [[nodiscard]] ConstMatMap<T> V(const Slot& s) const { return view(values_, s); }

private:
    static MatMap<T> G(Buffer<T>& grad, const Slot& s) { return view(grad, s); }

    void build_layout() {
        const std::size_t d = cfg_.d_model, f = cfg_.d_ff(), n = cfg_.n;
        auto ln = [&](const std::string& p) { return LnSlots{layout_.add(p + ".g", 1, d), layout_.add(p + ".b", 1, d)}; };
        auto attn = [&](const std::string& p) {
            AttnSlots a;
            a.wq = layout_.add(p + ".wq", d, d);
            a.bq = layout_.add(p + ".bq", 1, d);
            a.wk = layout_.add(p + ".wk", d, d);
            a.bk = layout_.add(p + ".bk", 1, d);
            a.wv = layout_.add(p + ".wv", d, d);
            a.bv = layout_.add(p + ".bv", 1, d);
            a.wo = layout_.add(p + ".wo", d, d);
            a.bo = layout_.add(p + ".bo", 1, d);
            return a;
        };
        auto ff = [&](const std::string& p) {
            return FfSlots{layout_.add(p + ".w1", d, f), layout_.add(p + ".b1", 1, f), layout_.add(p + ".w2", f, d),
                           layout_.add(p + ".b2", 1, d)};
        };
        mem_sym_ = layout_.add("mem.emb.symbol", 2 * cfg_.max_received(), d);
        if (cfg_.stat_memory) {
            mem_stat0_ = layout_.add("mem.emb.stat0", cfg_.memory_stat_max() + 1, d);
            mem_stat1_ = layout_.add("mem.emb.stat1", cfg_.memory_stat_max() + 1, d);
        }
        for (std::size_t l = 0; l < cfg_.encoder_layers; ++l) {
            const std::string p = "enc." + std::to_string(l);
            enc_.push_back({ln(p + ".ln1"), attn(p + ".self"), ln(p + ".ln2"), ff(p + ".ff")});
        }
        mem_ln_ = ln("mem.ln");
        start_ = layout_.add("tgt.start", 1, d);
        tgt_sym_ = layout_.add("tgt.symbol", 2 * n, d);
        if (cfg_.stat_target) {
            tgt_stat0_ = layout_.add("tgt.stat0", cfg_.target_stat_max() + 1, d);
            tgt_stat1_ = layout_.add("tgt.stat1", cfg_.target_stat_max() + 1, d);
        }
        for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
            const std::string p = "dec." + std::to_string(l);
            dec_.push_back({ln(p + ".ln1"), attn(p + ".self"), ln(p + ".ln2"), attn(p + ".cross"), ln(p + ".ln3"),
                            ff(p + ".ff")});
        }
        out_ln_ = ln("out.ln");
        out_w_ = layout_.add("out.w", d, 2);
        out_b_ = layout_.add("out.b", 1, 2);
    }

    void ffn_forward(const FfSlots& s, const Mat<T>& z, Mat<T>& u, Mat<T>& g, Mat<T>& out) const {
        linear_forward<T>(z, V(s.w1), V(s.b1), u);
        g = u.unaryExpr([](T v) { return gelu(v); });
        linear_forward<T>(g, V(s.w2), V(s.b2), out);
    }

    // dout: gradient wrt the FFN output; returns dz.
    void ffn_backward(const FfSlots& s, const Mat<T>& z, const Mat<T>& u, const Mat<T>& g, const Mat<T>& dout,
                      Mat<T>& dz, Buffer<T>& grad) const {
        Mat<T> dg;
        linear_backward<T>(g, V(s.w2), dout, G(grad, s.w2), G(grad, s.b2), &dg, false);
        Mat<T> du = dg.array() * u.unaryExpr([](T v) { return gelu_grad(v); }).array();
        linear_backward<T>(z, V(s.w1), du, G(grad, s.w1), G(grad, s.b1), &dz, false);
    }

    void encoder_forward(const EncoderLayer& L, const Segments& seg, Mat<T>& x, EncoderCache& c) const {
        c.x_in = x;
        layernorm_forward<T>(x, V(L.ln1.g), V(L.ln1.b), c.z1, &c.ln1);
        linear_forward<T>(c.z1, V(L.self.wq), V(L.self.bq), c.self.q);
        linear_forward<T>(c.z1, V(L.self.wk), V(L.self.bk), c.self.k);
        linear_forward<T>(c.z1, V(L.self.wv), V(L.self.bv), c.self.v);
        attention_forward<T>(c.self.q, c.self.k, c.self.v, seg, cfg_.n_heads, nullptr, c.self.o, &c.self.att);
        Mat<T> a;
        linear_forward<T>(c.self.o, V(L.self.wo), V(L.self.bo), a);
        c.x1 = x + a;
        layernorm_forward<T>(c.x1, V(L.ln2.g), V(L.ln2.b), c.z2, &c.ln2);
        Mat<T> f;
        ffn_forward(L.ff, c.z2, c.u, c.g, f);
        x = c.x1 + f;
    }

    // dx: gradient wrt the layer output on entry, wrt the layer input on exit.
    void encoder_backward(const EncoderLayer& L, const Segments& seg, const EncoderCache& c, Mat<T>& dx,
                          Buffer<T>& grad) const {
        Mat<T> dz;
        ffn_backward(L.ff, c.z2, c.u, c.g, dx, dz, grad);
        layernorm_backward<T>(c.ln2, V(L.ln2.g), dz, G(grad, L.ln2.g), G(grad, L.ln2.b), dx, true);
        self_attention_backward(L.self, seg, c.z1, c.self, dx, dz, grad);
        layernorm_backward<T>(c.ln1, V(L.ln1.g), dz, G(grad, L.ln1.g), G(grad, L.ln1.b), dx, true);
    }

    // Backward through out = x + Wo(attn(z)) w.r.t. z (given dx = d out), writes dz.
    void self_attention_backward(const AttnSlots& s, const Segments& seg, const Mat<T>& z, const AttnCache& c,
                                 const Mat<T>& dx, Mat<T>& dz, Buffer<T>& grad) const {
        Mat<T> dO;
        linear_backward<T>(c.o, V(s.wo), dx, G(grad, s.wo), G(grad, s.bo), &dO, false);
        Mat<T> dq = Mat<T>::Zero(c.q.rows(), c.q.cols());
        Mat<T> dk = Mat<T>::Zero(c.k.rows(), c.k.cols());
        Mat<T> dv = Mat<T>::Zero(c.v.rows(), c.v.cols());
        attention_backward<T>(c.q, c.k, c.v, seg, cfg_.n_heads, c.att, dO, dq, dk, dv);
        linear_backward<T>(z, V(s.wq), dq, G(grad, s.wq), G(grad, s.bq), &dz, false);
        linear_backward<T>(z, V(s.wk), dk, G(grad, s.wk), G(grad, s.bk), &dz, true);
        linear_backward<T>(z, V(s.wv), dv, G(grad, s.wv), G(grad, s.bv), &dz, true);
    }

    void decoder_forward(const DecoderLayer& L, const Cache& cc, Mat<T>& x, DecoderCache& c) const {
        c.x_in = x;
        layernorm_forward<T>(x, V(L.ln1.g), V(L.ln1.b), c.z1, &c.ln1);
        linear_forward<T>(c.z1, V(L.self.wq), V(L.self.bq), c.self.q);
        linear_forward<T>(c.z1, V(L.self.wk), V(L.self.bk), c.self.k);
        linear_forward<T>(c.z1, V(L.self.wv), V(L.self.bv), c.self.v);
        attention_forward<T>(c.self.q, c.self.k, c.self.v, cc.dec_self, cfg_.n_heads, &self_mask_, c.self.o,
                             &c.self.att);
        Mat<T> a;
        linear_forward<T>(c.self.o, V(L.self.wo), V(L.self.bo), a);
        c.x1 = x + a;

        layernorm_forward<T>(c.x1, V(L.ln2.g), V(L.ln2.b), c.z2, &c.ln2);
        linear_forward<T>(c.z2, V(L.cross.wq), V(L.cross.bq), c.cross.q);
        linear_forward<T>(cc.memory, V(L.cross.wk), V(L.cross.bk), c.cross.k);
        linear_forward<T>(cc.memory, V(L.cross.wv), V(L.cross.bv), c.cross.v);
        attention_forward<T>(c.cross.q, c.cross.k, c.cross.v, cc.cross, cfg_.n_heads, nullptr, c.cross.o,
                             &c.cross.att);
        linear_forward<T>(c.cross.o, V(L.cross.wo), V(L.cross.bo), a);
        c.x2 = c.x1 + a;

        layernorm_forward<T>(c.x2, V(L.ln3.g), V(L.ln3.b), c.z3, &c.ln3);
        Mat<T> f;
        ffn_forward(L.ff, c.z3, c.u, c.g, f);
        x = c.x2 + f;
    }

    void decoder_backward(const DecoderLayer& L, const Cache& cc, const DecoderCache& c, Mat<T>& dx, Mat<T>& dmem,
                          Buffer<T>& grad) const {
        Mat<T> dz;
        ffn_backward(L.ff, c.z3, c.u, c.g, dx, dz, grad);
        layernorm_backward<T>(c.ln3, V(L.ln3.g), dz, G(grad, L.ln3.g), G(grad, L.ln3.b), dx, true);

        Mat<T> dO;
        linear_backward<T>(c.cross.o, V(L.cross.wo), dx, G(grad, L.cross.wo), G(grad, L.cross.bo), &dO, false);
        Mat<T> dq = Mat<T>::Zero(c.cross.q.rows(), c.cross.q.cols());
        Mat<T> dk = Mat<T>::Zero(c.cross.k.rows(), c.cross.k.cols());
        Mat<T> dv = Mat<T>::Zero(c.cross.v.rows(), c.cross.v.cols());
        attention_backward<T>(c.cross.q, c.cross.k, c.cross.v, cc.cross, cfg_.n_heads, c.cross.att, dO, dq, dk, dv);
        linear_backward<T>(c.z2, V(L.cross.wq), dq, G(grad, L.cross.wq), G(grad, L.cross.bq), &dz, false);
        linear_backward<T>(cc.memory, V(L.cross.wk), dk, G(grad, L.cross.wk), G(grad, L.cross.bk), &dmem, true);
        linear_backward<T>(cc.memory, V(L.cross.wv), dv, G(grad, L.cross.wv), G(grad, L.cross.bv), &dmem, true);
        layernorm_backward<T>(c.ln2, V(L.ln2.g), dz, G(grad, L.ln2.g), G(grad, L.ln2.b), dx, true);

        self_attention_backward(L.self, cc.dec_self, c.z1, c.self, dx, dz, grad);
        layernorm_backward<T>(c.ln1, V(L.ln1.g), dz, G(grad, L.ln1.g), G(grad, L.ln1.b), dx, true);
    }

    TvtdConfig cfg_;
    ParameterLayout layout_;
    Buffer<T> values_;
    Mat<T> self_mask_;
    Slot mem_sym_, mem_stat0_, mem_stat1_;
    LnSlots mem_ln_;
    Slot start_, tgt_sym_, tgt_stat0_, tgt_stat1_;
    std::vector<EncoderLayer> enc_;
    std::vector<DecoderLayer> dec_;
    LnSlots out_ln_;
    Slot out_w_, out_b_;
};

}  // namespace vtcode::tvtd
