#pragma once

// Insertion/deletion/substitution channels.
//
// Every realization comes with a CorruptionLog whose events, applied in order to the
// source with apply_events(), reproduce the received word exactly. Event positions
// are 1-based indices into the sequence as it stands when the event is applied.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bitword.hpp"
#include "random.hpp"

namespace vtcode {

enum class ErrorKind { insertion = 0, deletion = 1, substitution = 2 };

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::insertion: return "ins";
        case ErrorKind::deletion: return "del";
        case ErrorKind::substitution: return "sub";
    }
    return "?";
}

struct ErrorEvent {
    ErrorKind kind;
    std::size_t position;
    std::optional<int> inserted_bit;  // present iff kind == insertion

    friend bool operator==(const ErrorEvent&, const ErrorEvent&) = default;
};

struct CorruptionLog {
    std::vector<ErrorEvent> events;
    std::size_t source_length = 0;
    std::size_t result_length = 0;

    [[nodiscard]] std::size_t count(ErrorKind k) const {
        return static_cast<std::size_t>(
            std::count_if(events.begin(), events.end(), [k](const ErrorEvent& e) { return e.kind == k; }));
    }

    friend bool operator==(const CorruptionLog&, const CorruptionLog&) = default;
};

class EmptySequence : public Error {
public:
    using Error::Error;
};

/// Probabilities over {insertion, deletion, substitution}.
struct TypeWeights {
    std::array<double, 3> w{1.0 / 3, 1.0 / 3, 1.0 / 3};

    [[nodiscard]] double operator[](ErrorKind k) const { return w[static_cast<std::size_t>(k)]; }
    void validate() const {
        double s = 0;
        for (double x : w) {
            if (!(x >= 0)) throw ParamError("TypeWeights: negative weight");
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ParamError("TypeWeights: weights must sum to 1");
    }
};

enum class ChannelMode { fixed_count, iid };

struct ChannelSpec {
    ChannelMode mode = ChannelMode::fixed_count;
    std::size_t k = 0;
    double rate = 0.0;
    TypeWeights type_weights{};

    static ChannelSpec fixed(std::size_t k) { return {ChannelMode::fixed_count, k, 0.0, {}}; }
    static ChannelSpec iid(double rate) { return {ChannelMode::iid, 0, rate, {}}; }

    void validate() const {
        if (!(rate >= 0.0 && rate <= 1.0)) throw ParamError("ChannelSpec: rate must lie in [0, 1]");
        type_weights.validate();
    }

    /// "fixed:K" or "iid:RATE".
    [[nodiscard]] std::string str() const {
        if (mode == ChannelMode::fixed_count) return "fixed:" + std::to_string(k);
        char buf[64];
        std::snprintf(buf, sizeof buf, "iid:%g", rate);
        return buf;
    }

    static ChannelSpec parse(const std::string& text) {
        const auto colon = text.find(':');
        if (colon == std::string::npos) throw ParseError("channel spec must be fixed:K or iid:RATE, got '" + text + "'");
        const std::string head = text.substr(0, colon);
        const std::string tail = text.substr(colon + 1);
        try {
            if (head == "fixed") return fixed(static_cast<std::size_t>(std::stoul(tail)));
            if (head == "iid") {
                auto c = iid(std::stod(tail));
                c.validate();
                return c;
            }
        } catch (const std::logic_error&) {
            throw ParseError("bad channel parameter in '" + text + "'");
        }
        throw ParseError("unknown channel mode '" + head + "'");
    }
};

namespace detail {

inline ErrorKind draw_kind(Rng& rng, const TypeWeights& tw) {
    const double u = uniform01(rng);
    double acc = 0;
    for (std::size_t i = 0; i < 2; ++i) {
        acc += tw.w[i];
        if (u < acc) return static_cast<ErrorKind>(i);
    }
    return ErrorKind::substitution;
}

}  // namespace detail

/// Replays a log on its source word.
inline BitWord apply_events(BitWord word, const std::vector<ErrorEvent>& events) {
    for (const auto& e : events) {
        switch (e.kind) {
            case ErrorKind::insertion: word.insert_at(e.position, e.inserted_bit.value()); break;
            case ErrorKind::deletion: word.erase_at(e.position); break;
            case ErrorKind::substitution: word.flip(e.position); break;
        }
    }
    return word;
}

/// Exactly k events applied one after another to the evolving sequence. Substitutions
/// flip the bit, so every event is a realized channel error.
inline std::pair<BitWord, CorruptionLog> corrupt_fixed(const BitWord& codeword, std::size_t k, Rng& rng,
                                                       const TypeWeights& tw = {}) {
    if (codeword.empty()) throw EmptySequence("corrupt_fixed: empty codeword");
    BitWord w = codeword;
    CorruptionLog log;
    log.source_length = codeword.size();
    for (std::size_t e = 0; e < k; ++e) {
        ErrorKind kind = detail::draw_kind(rng, tw);
        // Deletion or substitution needs a bit to act on; redraw on an emptied sequence.
        while (kind != ErrorKind::insertion && w.empty()) {
            if (tw[ErrorKind::insertion] <= 0)
                throw EmptySequence("corrupt_fixed: sequence emptied and insertions have zero weight");
            kind = detail::draw_kind(rng, tw);
        }
        if (kind == ErrorKind::insertion) {
            const std::size_t pos = 1 + uniform_below(rng, w.size() + 1);
            const int b = random_bit(rng);
            w.insert_at(pos, b);
            log.events.push_back({kind, pos, b});
        } else {
            const std::size_t pos = 1 + uniform_below(rng, w.size());
            if (kind == ErrorKind::deletion)
                w.erase_at(pos);
            else
                w.flip(pos);
            log.events.push_back({kind, pos, std::nullopt});
        }
    }
    log.result_length = w.size();
    return {std::move(w), std::move(log)};
}

/// Independent errors: each transmitted position suffers an event with probability `rate`.
/// An insertion puts a uniform bit in front of the current bit, which is then sent intact;
/// one more insertion opportunity follows the last position.
inline std::pair<BitWord, CorruptionLog> corrupt_iid(const BitWord& codeword, double rate, Rng& rng,
                                                     const TypeWeights& tw = {}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ParamError("corrupt_iid: rate must lie in [0, 1]");
    BitWord out;
    CorruptionLog log;
    log.source_length = codeword.size();
    for (std::size_t t = 0; t < codeword.size(); ++t) {
        const int bit = codeword[t];
        const std::size_t here = out.size() + 1;
        if (rate > 0 && bernoulli(rng, rate)) {
            const ErrorKind kind = detail::draw_kind(rng, tw);
            switch (kind) {
                case ErrorKind::insertion: {
                    const int b = random_bit(rng);
                    out.push_back(b);
                    out.push_back(bit);
                    log.events.push_back({kind, here, b});
                    break;
                }
                case ErrorKind::deletion: log.events.push_back({kind, here, std::nullopt}); break;
                case ErrorKind::substitution:
                    out.push_back(bit ^ 1);
                    log.events.push_back({kind, here, std::nullopt});
                    break;
            }
        } else {
            out.push_back(bit);
        }
    }
    if (rate > 0 && bernoulli(rng, rate * tw[ErrorKind::insertion])) {
        const int b = random_bit(rng);
        log.events.push_back({ErrorKind::insertion, out.size() + 1, b});
        out.push_back(b);
    }
    log.result_length = out.size();
    return {std::move(out), std::move(log)};
}

inline std::pair<BitWord, CorruptionLog> corrupt(const BitWord& codeword, const ChannelSpec& spec, Rng& rng) {
    return spec.mode == ChannelMode::fixed_count ? corrupt_fixed(codeword, spec.k, rng, spec.type_weights)
                                                 : corrupt_iid(codeword, spec.rate, rng, spec.type_weights);
}

/// Levenshtein distance with unit costs.
inline std::size_t edit_distance(const BitWord& a, const BitWord& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1] ? 1U : 0U)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace vtcode
