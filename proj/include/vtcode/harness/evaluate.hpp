#pragma once

// BER/FER evaluation, timing and the JSON report.

#include <chrono>
#include <cstdio>
#include <thread>

#include "json.hpp"

#include "dataset.hpp"
#include "decoders.hpp"
#include "metrics.hpp"

namespace vtcode::harness {

inline constexpr int kReportSchemaVersion = 1;

struct ExperimentSpec {
    std::size_t n = 20;
    std::size_t a = 14;
    ChannelSpec channel = ChannelSpec::fixed(1);
    DecoderKind decoder = DecoderKind::hd;
    std::string checkpoint;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    bool message_only = false;

    void validate() const {
        if (trials < 1) throw ParamError("ExperimentSpec: trials must be >= 1");
        channel.validate();
        if (decoder == DecoderKind::tvtd && checkpoint.empty())
            throw ParamError("ExperimentSpec: the tvtd decoder needs a checkpoint");
        (void)VtParams(n, a);
    }
};

struct MetricsReport {
    std::string decoder;
    std::size_t n = 0;
    std::size_t a = 0;
    std::string channel;
    std::uint64_t seed = 0;
    bool message_only = false;
    ErrorCounts counts;
    double seconds = 0;  // decoding wall-clock, not part of the deterministic JSON

    [[nodiscard]] double ber() const noexcept { return counts.ber(); }
    [[nodiscard]] double fer() const noexcept { return counts.fer(); }
};

/// Decodes every row and scores it. Scoring is per row and summed, so the result does not
/// depend on how rows are batched.
inline MetricsReport evaluate_rows(const Dataset& rows, const Decoder& decoder, const VtParams& code,
                                   bool message_only = false) {
    MetricsReport rep;
    rep.decoder = to_string(decoder.kind());
    rep.n = code.n();
    rep.a = code.a();
    rep.message_only = message_only;
    std::vector<BitWord> received;
    received.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.groundtruth.size() != code.n())
            throw LengthError("evaluate: groundtruth of length " + std::to_string(r.groundtruth.size()) +
                              " for a code of length " + std::to_string(code.n()));
        received.push_back(r.corrupted);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto decoded = decoder.decode(received);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto positions = code.message_positions();
    for (std::size_t i = 0; i < rows.size(); ++i)
        rep.counts += message_only ? score_frame(decoded[i], rows[i].groundtruth, positions)
                                   : score_frame(decoded[i], rows[i].groundtruth);
    return rep;
}

inline MetricsReport evaluate(const ExperimentSpec& spec, const Decoder& decoder) {
    spec.validate();
    const VtParams code(spec.n, spec.a);
    auto rep = evaluate_rows(gen_dataset(code, spec.channel, spec.trials, spec.seed), decoder, code, spec.message_only);
    rep.channel = spec.channel.str();
    rep.seed = spec.seed;
    return rep;
}

inline MetricsReport evaluate(const ExperimentSpec& spec) {
    spec.validate();
    const auto dec = make_decoder(spec.decoder, VtCode(spec.n, spec.a), spec.channel, spec.checkpoint);
    return evaluate(spec, *dec);
}

inline nlohmann::ordered_json to_json(const MetricsReport& r, bool include_timing = false) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["decoder"] = r.decoder;
    j["code"] = {{"n", r.n}, {"a", r.a}};
    j["channel"] = r.channel;
    j["seed"] = r.seed;
    j["scope"] = r.message_only ? "message" : "codeword";
    j["trials"] = r.counts.frames;
    j["bits"] = r.counts.bits;
    j["bit_errors"] = r.counts.bit_errors;
    j["frame_errors"] = r.counts.frame_errors;
    j["ber"] = r.ber();
    j["fer"] = r.fer();
    j["one_minus_ber"] = 1.0 - r.ber();
    j["one_minus_fer"] = 1.0 - r.fer();
    j["ber_ci95"] = ci95(r.ber(), r.counts.bits);
    j["fer_ci95"] = ci95(r.fer(), r.counts.frames);
    if (include_timing) {
        j["seconds"] = r.seconds;
        j["words_per_second"] = r.seconds > 0 ? static_cast<double>(r.counts.frames) / r.seconds : 0.0;
    }
    return j;
}

/// Table row in the paper's style: percentages of 1-BER and 1-FER.
inline std::string table_line(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-5s VT(%zu,%zu) %-12s trials=%-7zu 1-BER=%7.3f%% (+-%.3f)  1-FER=%7.3f%% (+-%.3f)",
                  r.decoder.c_str(), r.n, r.a, r.channel.c_str(), r.counts.frames, 100.0 * (1.0 - r.ber()),
                  100.0 * ci95(r.ber(), r.counts.bits), 100.0 * (1.0 - r.fer()), 100.0 * ci95(r.fer(), r.counts.frames));
    return buf;
}

struct TimingEntry {
    std::string decoder;
    std::size_t words = 0;
    double seconds = 0;
    [[nodiscard]] double words_per_second() const noexcept { return seconds > 0 ? static_cast<double>(words) / seconds : 0.0; }
};

struct TimingReport {
    std::vector<TimingEntry> entries;
    std::string hardware;
};

inline std::string hardware_note() {
    std::string note = std::to_string(std::thread::hardware_concurrency()) + " hardware threads, single-threaded run";
#if defined(__VERSION__)
    note += ", compiler " + std::string(__VERSION__);
#endif
    return note;
}

/// Wall-clock of each decoder on the same `count` corrupted words.
inline TimingReport time_decoders(const VtParams& code, const ChannelSpec& channel, std::size_t count, std::uint64_t seed,
                                  const std::vector<const Decoder*>& decoders) {
    const Dataset rows = gen_dataset(code, channel, count, seed);
    std::vector<BitWord> received;
    for (const auto& r : rows) received.push_back(r.corrupted);
    TimingReport rep;
    rep.hardware = hardware_note();
    for (const Decoder* d : decoders) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = d->decode(received);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (out.size() != received.size()) throw Error("decoder returned the wrong number of words");
        rep.entries.push_back({to_string(d->kind()), count, s});
    }
    return rep;
}

inline nlohmann::ordered_json to_json(const TimingReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["hardware"] = r.hardware;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : r.entries)
        j["entries"].push_back(
            {{"decoder", e.decoder}, {"words", e.words}, {"seconds", e.seconds}, {"words_per_second", e.words_per_second()}});
    return j;
}

}  // namespace vtcode::harness
