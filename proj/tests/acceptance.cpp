// Acceptance suite. Each criterion prints one PASS/FAIL line; with arguments only the
// named criteria run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "vtcode/exact_map.hpp"
#include "vtcode/harness/evaluate.hpp"
#include "vtcode/hd_decoder.hpp"
#include "vtcode/siso_decoder.hpp"
#include "vtcode/harness/ablation.hpp"
#include "vtcode/tvtd/checkpoint.hpp"
#include "vtcode/tvtd/infer.hpp"
#include "vtcode/tvtd/train.hpp"

using namespace vtcode;
using namespace vtcode::harness;
using namespace vtcode::tvtd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::vector<BitWord> all_codewords(const VtParams& code) {
    std::vector<BitWord> out;
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << code.y()); ++i)
        out.push_back(encode(message_from_index(i, code.y()), code));
    return out;
}

BitWord random_word(std::size_t len, Rng& rng) {
    BitWord w(len);
    for (std::size_t i = 1; i <= len; ++i) w.set_bit(i, random_bit(rng));
    return w;
}

// ---------------------------------------------------------------- criteria

Outcome hd_exhaustive() {
    const VtParams code(20, 14);
    std::size_t cases = 0, failures = 0;
    for (const auto& cw : all_codewords(code)) {
        auto check = [&](const BitWord& r) {
            ++cases;
            failures += decode_hd(r, code).decoded != cw;
        };
        for (std::size_t p = 1; p <= 20; ++p) {
            BitWord d = cw;
            d.erase_at(p);
            check(d);
            BitWord s = cw;
            s.flip(p);
            check(s);
        }
        for (std::size_t p = 1; p <= 21; ++p)
            for (int b : {0, 1}) {
                BitWord ins = cw;
                ins.insert_at(p, b);
                check(ins);
            }
    }
    return {failures == 0, std::to_string(cases) + " single-error words, " + std::to_string(failures) + " failures"};
}

Outcome encoder_fidelity() {
    const BitWord example = encode(BitWord::parse("11011"), VtParams(10, 0));
    const bool example_ok = example.str() == "0010101111";
    const VtParams code(20, 14);
    std::size_t failures = 0;
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << code.y()); ++i) {
        const BitWord m = message_from_index(i, code.y());
        const BitWord c = encode(m, code);
        failures += !(is_codeword(c, code) && extract_message(c, code) == m);
    }
    return {example_ok && failures == 0,
            "encode(11011) = " + example.str() + ", 2^14 round trips with " + std::to_string(failures) + " failures"};
}

Outcome siso_oracle() {
    const VtCode code(8, 4);
    std::vector<BitWord> book;
    for (std::uint32_t x = 0; x < 256; ++x) {
        BitWord w(8);
        for (std::size_t i = 0; i < 8; ++i) w[i] = static_cast<std::uint8_t>((x >> (7 - i)) & 1U);
        if (is_codeword(w, code)) book.push_back(w);
    }
    Rng rng(2024);
    double worst = 0;
    std::size_t inf_mismatch = 0, trials = 0;
    for (; trials < 1500; ++trials) {
        const BitWord& v = book[uniform_below(rng, book.size())];
        const double rate = 0.005 + 0.095 * uniform01(rng);
        const BitWord r = corrupt_iid(v, rate, rng).first;
        const auto prior = build_prior(ChannelSpec::iid(rate), 8, r.size());
        const auto fb = forward_backward(r, code, prior);
        const auto ex = exact_map_oracle(r, code, prior);
        for (std::size_t i = 0; i < 8; ++i) {
            if (std::isinf(ex[i]) || std::isinf(fb[i]))
                inf_mismatch += fb[i] != ex[i];
            else
                worst = std::max(worst, std::abs(fb[i] - ex[i]));
        }
    }
    return {worst < 1e-6 && inf_mismatch == 0,
            std::to_string(trials) + " corruptions of VT(8,4) at rates <= 10%, max |LLR diff| " + fmt("%.2e", worst)};
}

Outcome siso_frame_accuracy() {
    ExperimentSpec spec;
    spec.decoder = DecoderKind::siso;
    spec.trials = 10000;
    spec.seed = 7;
    spec.channel = ChannelSpec::fixed(1);
    const double one = 1.0 - evaluate(spec).fer();
    spec.channel = ChannelSpec::fixed(2);
    const double two = 1.0 - evaluate(spec).fer();
    const bool ok = one >= 0.965 && one <= 1.0 && two >= 0.08 && two <= 0.20;
    return {ok, fmt("1 error: 1-FER %.2f%% (band [96.5, 100]); 2 errors: 1-FER %.2f%% (band [8, 20])", 100 * one, 100 * two)};
}

Outcome tvtd_gradient() {
    TvtdConfig c;
    c.n = 10;
    c.max_drift = 3;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.window = 4;
    c.seed = 11;
    TvtdModel<double> m(c);
    Rng rng(12);
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 4; ++i) pairs.push_back({random_word(8 + uniform_below(rng, 5), rng), random_word(10, rng)});
    Buffer<double> grad(m.parameter_count(), 0.0);
    m.loss_and_grad(pairs, &grad);
    double worst = 0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double keep = m.values()[i];
        const double h = 1e-5;
        m.values()[i] = keep + h;
        const double up = m.loss_and_grad(pairs, nullptr).loss;
        m.values()[i] = keep - h;
        const double down = m.loss_and_grad(pairs, nullptr).loss;
        m.values()[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::abs(numeric) + std::abs(grad[i]);
        if (scale < 1e-7) continue;
        ++checked;
        worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
    }
    return {worst < 1e-4, std::to_string(checked) + " of " + std::to_string(grad.size()) +
                              " parameters checked, max relative error " + fmt("%.2e", worst)};
}

double teacher_forced_accuracy(const TvtdModel<float>& m, const std::vector<TrainingPair>& pairs) {
    std::size_t correct = 0, tokens = 0;
    for (std::size_t off = 0; off < pairs.size(); off += 64) {
        const std::size_t len = std::min<std::size_t>(64, pairs.size() - off);
        const auto st = m.loss_and_grad(std::span<const TrainingPair>(pairs.data() + off, len), nullptr);
        correct += st.correct;
        tokens += st.tokens;
    }
    return static_cast<double>(correct) / static_cast<double>(tokens);
}

Outcome tvtd_capacity() {
    const VtParams code(20, 14);
    Rng rng(31);
    std::vector<TrainingPair> pairs;
    for (int i = 0; i < 256; ++i) {
        const BitWord cw = encode(message_from_index(uniform_below(rng, 1u << 14), code.y()), code);
        pairs.push_back(make_training_pair(cw, ChannelSpec::fixed(1), 24, rng));
    }
    TvtdConfig c = TvtdConfig::desk_preset(20);
    c.warmup_steps = 50;
    TvtdModel<float> m(c);
    Trainer<float> trainer(m);
    TrainOptions opt;
    opt.epochs = 500 / ((pairs.size() + c.batch - 1) / c.batch);
    opt.max_steps = 500;
    double acc = 0;
    std::size_t steps_at_target = 0;
    opt.on_epoch = [&](const EpochRecord&) {
        if (steps_at_target) return;
        acc = teacher_forced_accuracy(m, pairs);
        if (acc >= 0.999) steps_at_target = trainer.steps();
    };
    trainer.run(fixed_source(pairs), pairs.size(), opt);
    if (!steps_at_target) acc = teacher_forced_accuracy(m, pairs);
    return {steps_at_target > 0,
            steps_at_target ? "reached >= 99.9% teacher-forced token accuracy after " + std::to_string(steps_at_target) + " steps"
                            : fmt("token accuracy %.4f after 500 steps", acc)};
}

Outcome tvtd_end_to_end() {
    const VtParams code(20, 14);
    const auto split = split_codebook(code, 1);
    const TvtdConfig c = TvtdConfig::desk_preset(20);
    TvtdModel<float> model(c);
    Trainer<float> trainer(model);
    TrainOptions opt;
    opt.on_epoch = [&](const EpochRecord& r) {
        std::printf("      epoch %2zu/%zu  loss %.5f  token-acc %.5f  %.0fs\n", r.epoch, c.epochs, r.loss, r.token_accuracy,
                    r.seconds);
        std::fflush(stdout);
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto curve = trainer.run(regenerating_source(split.train, ChannelSpec::fixed(1), c.max_received(), c.seed),
                                   split.train.size(), opt);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    save_checkpoint(model, "acceptance_tvtd.ckpt",
                    {{"code", "20,14"}, {"task", "fixed:1"}, {"data", "split:1"}, {"epoch", std::to_string(curve.size())}});
    const TvtdBatch decoder(std::move(model));
    const auto one = evaluate_rows(heldout_rows(split.test, ChannelSpec::fixed(1), 10000, 99), decoder, code);
    const auto clean = evaluate_rows(heldout_rows(split.test, ChannelSpec::fixed(0), split.test.size(), 98), decoder, code);
    const double acc1 = 1.0 - one.fer();
    const double acc0 = 1.0 - clean.fer();
    return {acc1 >= 0.95, fmt("held-out 1 error: 1-FER %.2f%% (>= 95); clean held-out: %.2f%%; training %.1f min", 100 * acc1,
                              100 * acc0, minutes)};
}

Outcome mask_embedding_properties() {
    std::size_t failures = 0;
    Rng rng(5);
    // Causality: flipping teacher bit t leaves every output row that predicts bits <= t unchanged.
    {
        TvtdConfig c;
        c.n = 16;
        c.max_drift = 4;
        c.d_model = 16;
        c.n_layers = 2;
        c.n_heads = 2;
        c.window = 5;
        TvtdModel<double> m(c);
        for (int trial = 0; trial < 1000; ++trial) {
            const BitWord r = random_word(14 + uniform_below(rng, 5), rng);
            BitWord t = random_word(16, rng);
            const auto before = m.forward(r, t);
            const std::size_t flip = 1 + uniform_below(rng, 16);
            t.flip(flip);
            const auto after = m.forward(r, t);
            for (std::size_t i = 0; i < flip; ++i)
                failures += before.row(static_cast<Eigen::Index>(i)) != after.row(static_cast<Eigen::Index>(i));
        }
    }
    // Zero weight wherever the mask is -inf; every row keeps a finite entry.
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = 1 + uniform_below(rng, 40), w = 1 + uniform_below(rng, 40);
        const Mat<double> mask = build_masks(L, w);
        Mat<double> q = Mat<double>::Random(static_cast<Eigen::Index>(L), 4) * 4.0;
        Mat<double> k = Mat<double>::Random(static_cast<Eigen::Index>(L), 4) * 4.0;
        Mat<double> v = Mat<double>::Random(static_cast<Eigen::Index>(L), 4);
        Mat<double> out;
        AttentionCache<double> cache;
        attention_forward(q, k, v, Segments{{0}, {L}, {0}, {L}}, 2, &mask, out, &cache);
        for (const auto& p : cache.probs)
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                failures += !std::isfinite(mask.row(r).maxCoeff());
                for (Eigen::Index j = 0; j < p.cols(); ++j)
                    if (std::isinf(mask(r, j))) failures += p(r, j) != 0.0;
            }
    }
    // Gather purity: each symbol row is exactly the table row of (position, bit).
    {
        TvtdConfig c;
        c.n = 20;
        c.d_model = 16;
        c.n_heads = 2;
        TvtdModel<double> m(c);
        const auto tables = m.memory_tables();
        const auto sym = view(m.values(), tables.symbol);
        for (int trial = 0; trial < 1000; ++trial) {
            const BitWord word = random_word(1 + uniform_below(rng, tables.positions()), rng);
            const auto e = symbol_embed(word, tables);
            for (std::size_t i = 0; i < word.size(); ++i)
                failures += e.row(static_cast<Eigen::Index>(i)) != sym.row(static_cast<Eigen::Index>(symbol_row(i + 1, word[i])));
        }
    }
    // Statistic identity.
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = uniform_below(rng, 150);
        const auto s = position_sums(random_word(L, rng));
        failures += s.s0 + s.s1 != L * (L + 1) / 2;
    }
    return {failures == 0, "4 x 1000 randomized cases, " + std::to_string(failures) + " violations"};
}

Outcome timing_ordering() {
    const VtParams code(20, 14);
    const HdBatch hd(code);
    const SisoBatch siso(code, ChannelSpec::fixed(2));
    const auto rep = time_decoders(code, ChannelSpec::fixed(2), 1000, 3, {&hd, &siso});
    const double ratio = rep.entries[1].seconds / rep.entries[0].seconds;
    return {ratio >= 10.0, fmt("HD %.4f s, SISO %.3f s on 1000 words, ratio %.0fx (>= 10)", rep.entries[0].seconds,
                               rep.entries[1].seconds, ratio)};
}

Outcome metric_laws() {
    std::size_t reports = 0, violations = 0, mismatches = 0;
    auto check = [&](const ExperimentSpec& spec, const Decoder& dec) {
        const auto a = evaluate(spec, dec);
        const auto b = evaluate(spec, dec);
        ++reports;
        violations += a.fer() < a.ber();
        mismatches += to_json(a).dump(2) != to_json(b).dump(2);
    };
    const VtParams code(20, 14);
    const HdBatch hd(code);
    TvtdConfig tc;
    tc.d_model = 16;
    tc.n_heads = 2;
    tc.n_layers = 1;
    const TvtdBatch tvtd{TvtdModel<float>(tc)};
    std::vector<ChannelSpec> channels{ChannelSpec::fixed(0), ChannelSpec::fixed(1), ChannelSpec::fixed(2), ChannelSpec::fixed(3),
                                      ChannelSpec::iid(0.01), ChannelSpec::iid(0.05)};
    for (const auto& ch : channels) {
        ExperimentSpec spec;
        spec.channel = ch;
        spec.seed = 5;
        spec.trials = 2000;
        check(spec, hd);
        spec.trials = 300;
        check(spec, SisoBatch(code, ch));
        spec.trials = 500;
        check(spec, tvtd);
        spec.message_only = true;
        check(spec, hd);
    }
    return {violations == 0 && mismatches == 0, std::to_string(reports) + " reports, " + std::to_string(violations) +
                                                    " with FER < BER, " + std::to_string(mismatches) + " non-identical reruns"};
}

struct Criterion {
    const char* name;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"hd_exhaustive", hd_exhaustive},
    {"encoder_fidelity", encoder_fidelity},
    {"siso_oracle", siso_oracle},
    {"siso_frame_accuracy", siso_frame_accuracy},
    {"tvtd_gradient", tvtd_gradient},
    {"tvtd_capacity", tvtd_capacity},
    {"tvtd_end_to_end", tvtd_end_to_end},
    {"mask_embedding_properties", mask_embedding_properties},
    {"timing_ordering", timing_ordering},
    {"metric_laws", metric_laws},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> only(argv + 1, argv + argc);
    if (only.size() == 1 && only[0] == "--list") {
        for (const auto& c : kCriteria) std::printf("%s\n", c.name);
        return 0;
    }
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s);
        std::fflush(stdout);
        failed += !o.pass;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 2;
    }
    return failed ? 1 : 0;
}
