#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "vtcode/tvtd/checkpoint.hpp"
#include "vtcode/tvtd/infer.hpp"
#include "vtcode/tvtd/train.hpp"
#include "vtcode/vt_core.hpp"

using namespace vtcode;
using namespace vtcode::tvtd;

namespace {

TvtdConfig tiny_config(std::size_t n = 10, std::size_t window = 3) {
    TvtdConfig c;
    c.n = n;
    c.max_drift = 3;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.window = window;
    c.batch = 8;
    c.seed = 3;
    return c;
}

BitWord random_word(std::size_t len, Rng& rng) {
    BitWord w(len);
    for (std::size_t i = 1; i <= len; ++i) w.set_bit(i, random_bit(rng));
    return w;
}

std::vector<TrainingPair> random_pairs(const TvtdConfig& c, std::size_t count, Rng& rng) {
    std::vector<TrainingPair> out;
    for (std::size_t i = 0; i < count; ++i) {
        BitWord t = random_word(c.n, rng);
        const std::size_t len = c.n - 2 + uniform_below(rng, c.max_drift + 3);
        out.push_back({random_word(len, rng), t});
    }
    return out;
}

template <class T>
bool same_bits(const Mat<T>& a, const Mat<T>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(T) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

// ---------------------------------------------------------------- embeddings

TEST(Embedding, TableSizes) {
    TvtdConfig c = tiny_config(20);
    c.max_drift = 4;
    TvtdModel<double> m(c);
    const auto mem = m.memory_tables();
    EXPECT_EQ(mem.positions(), 24u);
    EXPECT_EQ(mem.symbol.rows, 48u);
    EXPECT_EQ(mem.stat_max(), 24u * 25u / 2u);
    EXPECT_EQ(mem.stat1.rows, 301u);
}

TEST(Embedding, SymbolGatherExample) {
    TvtdModel<double> m(tiny_config());
    const auto tables = m.memory_tables();
    const auto sym = view(m.values(), tables.symbol);
    const Mat<double> e = symbol_embed(BitWord::parse("01011"), tables);
    ASSERT_EQ(e.rows(), 5);
    const int rows[] = {0, 3, 4, 7, 9};  // e_{1,0}, e_{2,1}, e_{3,0}, e_{4,1}, e_{5,1}
    for (int i = 0; i < 5; ++i) EXPECT_TRUE(e.row(i) == sym.row(rows[i]));
    const Mat<double> z = symbol_embed(BitWord(6), tables);
    for (int i = 0; i < 6; ++i) EXPECT_TRUE(z.row(i) == sym.row(2 * i));
}

TEST(Embedding, GatherPurityUnderPerturbation) {
    TvtdModel<double> m(tiny_config());
    const auto tables = m.memory_tables();
    const auto sym = view(m.values(), tables.symbol);
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = 1 + uniform_below(rng, tables.positions());
        BitWord w = random_word(len, rng);
        const Mat<double> before = symbol_embed(w, tables);
        for (std::size_t i = 0; i < len; ++i)
            ASSERT_TRUE(before.row(static_cast<Eigen::Index>(i)) ==
                        sym.row(static_cast<Eigen::Index>(symbol_row(i + 1, w[i]))));
        const std::size_t flip = 1 + uniform_below(rng, len);
        w.flip(flip);
        const Mat<double> after = symbol_embed(w, tables);
        for (std::size_t i = 0; i < len; ++i) {
            const bool changed = before.row(static_cast<Eigen::Index>(i)) != after.row(static_cast<Eigen::Index>(i));
            ASSERT_EQ(changed, i + 1 == flip) << "trial " << trial << " row " << i;
        }
    }
}

TEST(Embedding, StatisticExamples) {
    const auto p = position_sums(BitWord::parse("01011"));
    EXPECT_EQ(p.s0, 4u);
    EXPECT_EQ(p.s1, 11u);
    const auto ones = position_sums(BitWord::parse("1111111"));
    EXPECT_EQ(ones.s0, 0u);
    EXPECT_EQ(ones.s1, 28u);
    TvtdModel<double> m(tiny_config());
    const auto tables = m.memory_tables();
    const Mat<double> s = stat_embed(BitWord::parse("01011"), tables);
    EXPECT_TRUE(s.row(0) == view(m.values(), tables.stat0).row(4));
    EXPECT_TRUE(s.row(1) == view(m.values(), tables.stat1).row(11));
}

TEST(Embedding, PartitionIdentity) {
    Rng rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = uniform_below(rng, 130);
        const auto p = position_sums(random_word(len, rng));
        ASSERT_EQ(p.s0 + p.s1, len * (len + 1) / 2);
    }
}

TEST(Embedding, CodewordEmbeddingLength) {
    TvtdConfig c = tiny_config(20);
    c.max_drift = 4;
    TvtdModel<double> m(c);
    Rng rng(8);
    EXPECT_EQ(embed_codeword(random_word(22, rng), m.memory_tables()).rows(), 24);
    EXPECT_EQ(embed_codeword(random_word(7, rng), m.memory_tables()).rows(), 9);
    c.stat_memory = false;
    TvtdModel<double> plain(c);
    EXPECT_EQ(embed_codeword(random_word(22, rng), plain.memory_tables()).rows(), 22);
}

TEST(Embedding, Overflow) {
    TvtdModel<double> m(tiny_config(10));
    Rng rng(2);
    EXPECT_THROW(symbol_embed(random_word(14, rng), m.memory_tables()), LengthOverflow);
    EXPECT_NO_THROW(symbol_embed(random_word(13, rng), m.memory_tables()));
    auto small = m.memory_tables();
    small.stat0.rows = 5;
    EXPECT_THROW(stat_embed(BitWord::parse("0001"), small), KeyOverflow);
    EXPECT_THROW(m.forward(random_word(14, rng), random_word(10, rng)), LengthOverflow);
}

// ---------------------------------------------------------------- masks

TEST(Mask, SmallExamples) {
    auto allowed = [](const Mat<double>& m) {
        std::vector<std::vector<int>> rows;
        for (Eigen::Index k = 0; k < m.rows(); ++k) {
            rows.emplace_back();
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                if (m(k, j) == 0.0) rows.back().push_back(static_cast<int>(j + 1));
        }
        return rows;
    };
    using R = std::vector<std::vector<int>>;
    EXPECT_EQ(allowed(build_masks(3, 2)), (R{{1}, {1, 2}, {1, 2, 3}}));
    EXPECT_EQ(allowed(build_masks(3, 5)), (R{{1}, {1, 2}, {1, 2, 3}}));
    EXPECT_EQ(allowed(build_masks(3, 1)), (R{{1}, {1, 2}, {2, 3}}));
    EXPECT_THROW(build_masks(0, 1), ParamError);
    EXPECT_THROW(build_masks(3, 0), ParamError);
}

TEST(Mask, MaskedEntriesGetZeroWeight) {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = 1 + uniform_below(rng, 24);
        const std::size_t w = 1 + uniform_below(rng, 26);
        const Mat<double> mask = build_masks(L, w);
        const std::size_t heads = 2, d = 4;
        Mat<double> q = Mat<double>::Random(static_cast<Eigen::Index>(L), d) * 3.0;
        Mat<double> k = Mat<double>::Random(static_cast<Eigen::Index>(L), d) * 3.0;
        Mat<double> v = Mat<double>::Random(static_cast<Eigen::Index>(L), d);
        Segments seg{{0}, {L}, {0}, {L}};
        Mat<double> out;
        AttentionCache<double> cache;
        attention_forward(q, k, v, seg, heads, &mask, out, &cache);
        for (const auto& p : cache.probs)
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                ASSERT_NEAR(p.row(r).sum(), 1.0, 1e-12);
                ASSERT_TRUE(std::isfinite(mask.row(r).maxCoeff()));
                for (Eigen::Index c = 0; c < p.cols(); ++c) {
                    const bool open = mask_allows(static_cast<std::size_t>(r), static_cast<std::size_t>(c), w);
                    if (!open) ASSERT_EQ(p(r, c), 0.0);
                    ASSERT_EQ(open, mask(r, c) == 0.0);
                }
            }
    }
}

// ---------------------------------------------------------------- forward

TEST(Forward, LogitShape) {
    TvtdModel<double> m(tiny_config());
    Rng rng(5);
    for (std::size_t len = 7; len <= 13; ++len) {
        const auto logits = m.forward(random_word(len, rng), random_word(10, rng));
        EXPECT_EQ(logits.rows(), 10);
        EXPECT_EQ(logits.cols(), 2);
        EXPECT_TRUE(logits.allFinite());
    }
}

TEST(Forward, BatchMatchesSingle) {
    const TvtdConfig c = tiny_config();
    TvtdModel<double> m(c);
    Rng rng(6);
    const auto pairs = random_pairs(c, 5, rng);
    const auto batched = m.forward(pairs);
    for (std::size_t b = 0; b < pairs.size(); ++b) {
        const auto single = m.forward(pairs[b].corrupted, pairs[b].target);
        EXPECT_LT((batched.middleRows(static_cast<Eigen::Index>(b * c.n), 10) - single).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Forward, CausalityPerturbation) {
    Rng rng(31);
    for (const bool stat_target : {true, false}) {
        TvtdConfig c = tiny_config(12, 4);
        c.stat_target = stat_target;
        TvtdModel<double> m(c);
        for (int trial = 0; trial < 1000; ++trial) {
            const BitWord r = random_word(c.n - 1 + uniform_below(rng, 3), rng);
            BitWord t = random_word(c.n, rng);
            const auto before = m.forward(r, t);
            const std::size_t flip = 1 + uniform_below(rng, c.n);  // teacher bit c_flip
            t.flip(flip);
            const auto after = m.forward(r, t);
            // Output row i predicts c_{i+1} and may only read c_1..c_i.
            for (std::size_t i = 0; i < c.n; ++i) {
                const bool same = before.row(static_cast<Eigen::Index>(i)) == after.row(static_cast<Eigen::Index>(i));
                if (i < flip) ASSERT_TRUE(same) << "row " << i << " saw teacher bit " << flip;
            }
            if (flip < c.n) ASSERT_FALSE(before.row(static_cast<Eigen::Index>(flip)) == after.row(static_cast<Eigen::Index>(flip)));
        }
    }
}

TEST(Forward, FullWindowEqualsPureCausal) {
    TvtdConfig windowed = tiny_config(12, 12);
    TvtdConfig causal = tiny_config(12, 1000);
    TvtdModel<double> a(windowed), b(causal);
    ASSERT_EQ(a.values(), b.values());
    Rng rng(12);
    const auto pairs = random_pairs(windowed, 20, rng);
    EXPECT_TRUE(same_bits(a.forward(pairs), b.forward(pairs)));
    TvtdConfig narrow = tiny_config(12, 2);
    TvtdModel<double> n2(narrow);
    EXPECT_FALSE(same_bits(a.forward(pairs), n2.forward(pairs)));
}

TEST(Forward, ParameterCountIsFunctionOfConfig) {
    const TvtdConfig c = tiny_config();
    TvtdModel<float> a(c), b(c);
    EXPECT_EQ(a.parameter_count(), b.parameter_count());
    TvtdConfig wider = c;
    wider.window = 7;
    wider.seed = 99;
    EXPECT_EQ(TvtdModel<float>(wider).parameter_count(), a.parameter_count());
    TvtdConfig deeper = c;
    deeper.n_layers = 3;
    EXPECT_GT(TvtdModel<float>(deeper).parameter_count(), a.parameter_count());
}

// ---------------------------------------------------------------- gradients

namespace {

double worst_gradient_error(const TvtdConfig& c, std::size_t stride) {
    TvtdModel<double> m(c);
    Rng rng(c.seed + 40);
    const auto pairs = random_pairs(c, 4, rng);
    Buffer<double> grad(m.parameter_count(), 0.0);
    m.loss_and_grad(pairs, &grad);
    double worst = 0;
    for (std::size_t i = 0; i < grad.size(); i += stride) {
        const double keep = m.values()[i];
        const double h = 1e-5;
        m.values()[i] = keep + h;
        const double up = m.loss_and_grad(pairs, nullptr).loss;
        m.values()[i] = keep - h;
        const double down = m.loss_and_grad(pairs, nullptr).loss;
        m.values()[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::abs(numeric) + std::abs(grad[i]);
        if (scale < 1e-7) continue;  // both zero up to finite-difference noise
        worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferences) { EXPECT_LT(worst_gradient_error(tiny_config(), 5), 1e-4); }

TEST(Gradient, MatchesWithEncoderAndWithoutStatistics) {
    TvtdConfig c = tiny_config(8, 2);
    c.encoder_layers = 1;
    c.stat_target = false;
    EXPECT_LT(worst_gradient_error(c, 11), 1e-4);
    c.encoder_layers = 0;
    c.stat_target = true;
    c.stat_memory = false;
    EXPECT_LT(worst_gradient_error(c, 11), 1e-4);
}

// ---------------------------------------------------------------- inference

TEST(Inference, OutputLengthAlwaysN) {
    TvtdModel<float> m(tiny_config());
    GreedyDecoder<float> dec(m);
    Rng rng(9);
    for (std::size_t len = 0; len <= 13; ++len) EXPECT_EQ(dec.decode(random_word(len, rng)).decoded.size(), 10u);
}

TEST(Inference, SelfConsistentWithTeacherForcing) {
    for (std::size_t window : {1, 3, 10}) {
        TvtdConfig c = tiny_config(10, window);
        c.d_model = 32;
        c.encoder_layers = window == 3 ? 1 : 0;
        TvtdModel<double> m(c);
        GreedyDecoder<double> dec(m);
        Rng rng(50 + window);
        std::vector<BitWord> words;
        for (int i = 0; i < 200; ++i) words.push_back(random_word(8 + uniform_below(rng, 5), rng));
        const auto results = dec.decode(words);
        for (std::size_t i = 0; i < words.size(); ++i) {
            const auto logits = m.forward(words[i], results[i].decoded);
            for (std::size_t t = 0; t < c.n; ++t) {
                const auto r = static_cast<Eigen::Index>(t);
                ASSERT_EQ(logits(r, 1) > logits(r, 0) ? 1 : 0, results[i].decoded[t]);
                const double p1 = 1.0 / (1.0 + std::exp(logits(r, 0) - logits(r, 1)));
                ASSERT_NEAR(p1, results[i].p_one[t], 1e-9);
            }
        }
    }
}

TEST(Inference, BatchedMatchesSingle) {
    TvtdModel<float> m(tiny_config());
    GreedyDecoder<float> dec(m);
    Rng rng(14);
    std::vector<BitWord> words;
    for (int i = 0; i < 30; ++i) words.push_back(random_word(8 + uniform_below(rng, 5), rng));
    const auto batched = dec.decode(words);
    for (std::size_t i = 0; i < words.size(); ++i) EXPECT_EQ(batched[i].decoded, dec.decode(words[i]).decoded);
}

TEST(Inference, StepCostLinearInWindow) {
    const std::size_t n = 64;
    for (std::size_t w : {1, 2, 4, 8, 16}) {
        TvtdConfig c = tiny_config(n, w);
        TvtdModel<float> m(c);
        GreedyDecoder<float> dec(m);
        Rng rng(1);
        std::vector<BitWord> word{random_word(n, rng)};
        StepCounters counters;
        dec.decode(word, &counters);
        EXPECT_EQ(counters.steps, n);
        // Keys read at step t and layer: min(t, w) + 1.
        std::size_t expect = 0;
        for (std::size_t t = 0; t < n; ++t) expect += std::min(t, w) + 1;
        EXPECT_EQ(counters.attended_keys, expect * c.n_layers);
        // One more step past the window costs exactly w + 1 keys per layer.
        TvtdConfig longer = c;
        longer.n = n + 1;
        TvtdModel<float> m2(longer);
        GreedyDecoder<float> dec2(m2);
        std::vector<BitWord> word2{random_word(n + 1, rng)};
        StepCounters c2;
        dec2.decode(word2, &c2);
        EXPECT_EQ(c2.attended_keys - counters.attended_keys, (w + 1) * c.n_layers);
    }
}

// ---------------------------------------------------------------- training

TEST(Training, CosineSchedule) {
    EXPECT_DOUBLE_EQ(cosine_lr(1e-3, 0, 100), 1e-3);
    EXPECT_NEAR(cosine_lr(1e-3, 50, 100), 5e-4, 1e-15);
    EXPECT_NEAR(cosine_lr(1e-3, 100, 100), 0.0, 1e-18);
    EXPECT_DOUBLE_EQ(cosine_lr(1e-3, 0, 100, 10), 1e-4);
    EXPECT_DOUBLE_EQ(cosine_lr(1e-3, 10, 100, 10), 1e-3);
}

TEST(Training, TrainingPairsRespectTask) {
    VtParams code(20, 14);
    Rng rng(3);
    std::size_t clean = 0;
    for (int i = 0; i < 2000; ++i) {
        const BitWord cw = encode(message_from_index(uniform_below(rng, 1u << 14), code.y()), code);
        const auto p = make_training_pair(cw, ChannelSpec::fixed(1), 24, rng);
        EXPECT_EQ(p.target, cw);
        const auto dist = edit_distance(p.corrupted, cw);
        EXPECT_LE(dist, 1u);
        clean += dist == 0;
    }
    EXPECT_NEAR(static_cast<double>(clean) / 2000, 0.5, 0.05);
    const BitWord cw(20);
    for (int i = 0; i < 200; ++i) EXPECT_LE(make_training_pair(cw, ChannelSpec::iid(0.5), 22, rng).corrupted.size(), 22u);
}

TEST(Training, FirstEpochBeatsUniformGuessing) {
    VtParams code(20, 14);
    std::vector<BitWord> words;
    for (std::uint64_t i = 0; i < 1024; ++i) words.push_back(encode(message_from_index(i * 16 + 5, code.y()), code));
    TvtdConfig c = TvtdConfig::desk_preset(20);
    c.d_model = 32;
    c.n_layers = 1;
    c.batch = 32;
    c.lr = 2e-3;
    c.warmup_steps = 0;
    TvtdModel<float> m(c);
    Trainer<float> trainer(m);
    TrainOptions opt;
    opt.epochs = 1;
    const auto curve = trainer.run(regenerating_source(words, ChannelSpec::fixed(1), c.max_received(), 5), words.size(), opt);
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_LT(curve[0].loss, std::log(2.0));
}

TEST(Training, SeededRunsGiveIdenticalCurves) {
    TvtdConfig c = tiny_config();
    Rng rng(77);
    const auto pairs = random_pairs(c, 40, rng);
    auto run = [&]() {
        TvtdModel<float> m(c);
        Trainer<float> trainer(m);
        TrainOptions opt;
        opt.epochs = 3;
        const auto curve = trainer.run(fixed_source(pairs), pairs.size(), opt);
        return std::make_pair(curve, m.values());
    };
    const auto a = run();
    const auto b = run();
    ASSERT_EQ(a.first.size(), 3u);
    for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(a.first[e].loss, b.first[e].loss);
    EXPECT_EQ(a.second, b.second);
}

TEST(Training, DivergenceGuard) {
    TvtdConfig c = tiny_config();
    TvtdModel<float> m(c);
    m.values()[m.layout()["out.b"].offset] = std::numeric_limits<float>::quiet_NaN();
    Rng rng(1);
    Trainer<float> trainer(m);
    EXPECT_THROW(trainer.run(fixed_source(random_pairs(c, 8, rng)), 8), Divergence);
}

// ---------------------------------------------------------------- config and checkpoints

TEST(Config, TextRoundTripAndPresets) {
    TvtdConfig c = tiny_config();
    c.lr = 3.5e-4;
    c.stat_memory = false;
    EXPECT_EQ(TvtdConfig::from_text(c.to_text()), c);
    EXPECT_EQ(TvtdConfig::from_text("d_model = 64 # wide\nn_heads=4\n").d_model, 64u);
    EXPECT_THROW(TvtdConfig::from_text("d_model=64\nd_ff=100\n"), ParseError);
    EXPECT_THROW(TvtdConfig::from_text("bogus=1\n"), ParseError);
    EXPECT_THROW(TvtdConfig::from_text("n_heads=x\n"), ParseError);
    const auto p = TvtdConfig::paper_preset(68);
    EXPECT_EQ(p.d_model, 512u);
    EXPECT_EQ(p.n_heads, 8u);
    EXPECT_EQ(p.n_layers, 3u);
    EXPECT_EQ(p.window, 17u);
    EXPECT_EQ(p.epochs, 200u);
    EXPECT_DOUBLE_EQ(p.lr, 1e-4);
    EXPECT_EQ(TvtdConfig::paper_preset(120).window, 30u);
    EXPECT_EQ(TvtdConfig::paper_preset(20).window, 20u);
    EXPECT_EQ(p.d_ff(), 2048u);
    TvtdConfig bad = c;
    bad.n_heads = 3;
    EXPECT_THROW(TvtdModel<float>{bad}, ParamError);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
    const TvtdConfig c = tiny_config();
    TvtdModel<float> m(c);
    m.initialize(1234);
    Rng rng(3);
    const auto pairs = random_pairs(c, 6, rng);
    const auto path = (std::filesystem::temp_directory_path() / "vtcode_ckpt_roundtrip.bin").string();
    save_checkpoint(m, path, {{"epoch", "7"}, {"loss", "0.125"}});
    const auto loaded = load_checkpoint<float>(path, 10);
    EXPECT_EQ(loaded.meta.at("epoch"), "7");
    EXPECT_EQ(loaded.model.config(), c);
    EXPECT_TRUE(same_bits(m.forward(pairs), loaded.model.forward(pairs)));
    std::filesystem::remove(path);
}

TEST(Checkpoint, SerializedBytesAreStable) {
    const TvtdConfig c = tiny_config();
    TvtdModel<float> m(c);
    const std::string a = serialize(m, {{"seed", "3"}});
    const std::string b = serialize(m, {{"seed", "3"}});
    EXPECT_EQ(fnv1a(a), fnv1a(b));
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize(deserialize<float>(a).model, {{"seed", "3"}}), a);
}

TEST(Checkpoint, Rejections) {
    const TvtdConfig c = tiny_config();
    TvtdModel<float> m(c);
    const std::string bytes = serialize(m);
    EXPECT_THROW(deserialize<float>(bytes, 20), ConfigMismatch);
    std::string versioned = bytes;
    versioned[8] = 9;
    EXPECT_THROW(deserialize<float>(versioned), VersionMismatch);
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    EXPECT_THROW(deserialize<float>(flipped), CorruptCheckpoint);
    EXPECT_THROW(deserialize<float>(bytes.substr(0, bytes.size() - 20)), CorruptCheckpoint);
    EXPECT_THROW(deserialize<float>("not a checkpoint"), CorruptCheckpoint);
}

TEST(Checkpoint, PrecisionConversion) {
    TvtdModel<double> m(tiny_config());
    const auto f = deserialize<float>(serialize(m)).model;
    for (std::size_t i = 0; i < m.values().size(); ++i) ASSERT_EQ(f.values()[i], static_cast<float>(m.values()[i]));
}
