#pragma once

// TVTD ablation grids: attention window, statistic embeddings on either side, and encoder
// depth. Every cell trains its own model on the training part of the codebook split and
// is scored on corruptions of the held-out part.

#include <functional>
#include <ostream>

#include "../tvtd/train.hpp"
#include "evaluate.hpp"

namespace vtcode::harness {

enum class AblationKind { window, statistic, encoder_depth };

inline AblationKind parse_ablation_kind(const std::string& s) {
    if (s == "window") return AblationKind::window;
    if (s == "statistic") return AblationKind::statistic;
    if (s == "encoder_depth") return AblationKind::encoder_depth;
    throw ParseError("unknown ablation '" + s + "' (expected window, statistic or encoder_depth)");
}

inline const char* to_string(AblationKind k) {
    switch (k) {
        case AblationKind::window: return "window";
        case AblationKind::statistic: return "statistic";
        case AblationKind::encoder_depth: return "encoder_depth";
    }
    return "?";
}

struct AblationCell {
    std::string variant;
    tvtd::TvtdConfig config;
};

/// Window grid w in {1, 2, 4, 8, 16, 32, all}; "all" is w = n, i.e. plain causal masking.
/// Statistic grid memory/target in {w/w, w/wo, wo/w, wo/wo}. Depth grid TVTD(0+3), TVTD(3+3).
inline std::vector<AblationCell> ablation_cells(AblationKind kind, const tvtd::TvtdConfig& base) {
    std::vector<AblationCell> cells;
    switch (kind) {
        case AblationKind::window:
            for (std::size_t w : {1, 2, 4, 8, 16, 32}) {
                auto c = base;
                c.window = w;
                cells.push_back({"w=" + std::to_string(w), c});
            }
            {
                auto c = base;
                c.window = base.n;
                cells.push_back({"w=all", c});
            }
            break;
        case AblationKind::statistic:
            for (int mem = 1; mem >= 0; --mem)
                for (int tgt = 1; tgt >= 0; --tgt) {
                    auto c = base;
                    c.stat_memory = mem != 0;
                    c.stat_target = tgt != 0;
                    cells.push_back({std::string(mem ? "w" : "wo") + "/" + (tgt ? "w" : "wo"), c});
                }
            break;
        case AblationKind::encoder_depth:
            for (std::size_t e : {std::size_t{0}, base.n_layers}) {
                auto c = base;
                c.encoder_layers = e;
                cells.push_back({"TVTD(" + std::to_string(e) + "+" + std::to_string(base.n_layers) + ")", c});
            }
            break;
    }
    return cells;
}

/// `trials` corrupted words cycling over `codewords`; row i uses stream i of `seed`.
inline Dataset heldout_rows(const std::vector<BitWord>& codewords, const ChannelSpec& channel, std::size_t trials,
                            std::uint64_t seed) {
    if (codewords.empty()) throw ParamError("heldout_rows: no codewords");
    channel.validate();
    Dataset rows;
    rows.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        Rng rng = stream_rng(seed, i);
        const BitWord& cw = codewords[i % codewords.size()];
        rows.push_back({corrupt(cw, channel, rng).first, cw});
    }
    return rows;
}

struct AblationOptions {
    std::size_t n = 20;
    std::size_t a = 14;
    ChannelSpec train_task = ChannelSpec::fixed(2);
    std::vector<ChannelSpec> eval_channels{ChannelSpec::fixed(1), ChannelSpec::fixed(2)};
    std::size_t trials = 3000;
    std::uint64_t split_seed = 1;
    std::uint64_t seed = 1;
    std::size_t epochs = 0;  // 0: each cell's config value
    std::function<void(const std::string& variant, const tvtd::EpochRecord&)> on_epoch;
};

struct AblationRow {
    std::string kind;
    std::string variant;
    tvtd::TvtdConfig config;
    MetricsReport report;
};

inline std::vector<AblationRow> ablation_suite(AblationKind kind, const tvtd::TvtdConfig& base,
                                               const AblationOptions& opt) {
    const VtParams code(opt.n, opt.a);
    if (base.n != opt.n) throw ParamError("ablation_suite: config n does not match the code");
    const auto split = split_codebook(code, opt.split_seed);
    std::vector<AblationRow> rows;
    for (const auto& cell : ablation_cells(kind, base)) {
        tvtd::TvtdModel<float> model(cell.config);
        tvtd::Trainer<float> trainer(model);
        tvtd::TrainOptions topt;
        topt.epochs = opt.epochs;
        if (opt.on_epoch) topt.on_epoch = [&](const tvtd::EpochRecord& r) { opt.on_epoch(cell.variant, r); };
        trainer.run(tvtd::regenerating_source(split.train, opt.train_task, cell.config.max_received(), opt.seed),
                    split.train.size(), topt);
        const TvtdBatch decoder(std::move(model));
        for (const auto& ch : opt.eval_channels) {
            auto rep = evaluate_rows(heldout_rows(split.test, ch, opt.trials, opt.seed + 1), decoder, code);
            rep.channel = ch.str();
            rep.seed = opt.seed;
            rows.push_back({to_string(kind), cell.variant, cell.config, rep});
        }
    }
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
    out << "kind,variant,window,stat_memory,stat_target,encoder_layers,channel,trials,ber,fer,one_minus_ber,one_minus_fer\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%d,%d,%zu,%s,%zu,%.6f,%.6f,%.6f,%.6f\n", r.kind.c_str(),
                      r.variant.c_str(), r.config.window, r.config.stat_memory ? 1 : 0, r.config.stat_target ? 1 : 0,
                      r.config.encoder_layers, r.report.channel.c_str(), r.report.counts.frames, r.report.ber(),
                      r.report.fer(), 1.0 - r.report.ber(), 1.0 - r.report.fer());
        out << buf;
    }
}

}  // namespace vtcode::harness
