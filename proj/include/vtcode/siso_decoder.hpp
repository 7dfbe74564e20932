#pragma once

// Bitwise-MAP (soft-in soft-out) decoding of VT codes over an IDS channel.
//
// The trellis state after transmitted position t is (s, d): s = sum_{i<=t} i v_i mod m and
// d = (#insertions - #deletions) so far, so that t + d received symbols are consumed.
// Per transmitted bit v_t the channel does one of
//
//   insertion     p_ins                : emit a uniform bit, then transmit v_t    (d += 1, 2 symbols)
//   deletion      p_del                : emit nothing                              (d -= 1, 0 symbols)
//   transmission  1 - p_ins - p_del    : emit v_t                                  (d unchanged, 1 symbol)
//
// and every transmitted bit is flipped with probability p_sub. After position n one more
// insertion may occur with probability p_ins. The ids_channel simulator follows the same
// story. All arithmetic is in the log domain.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hd_decoder.hpp"
#include "ids_channel.hpp"
#include "vt_core.hpp"

namespace vtcode {

class NoValidPath : public Error {
public:
    using Error::Error;
};

struct ChannelPrior {
    double p_ins = 0.0;
    double p_del = 0.0;
    double p_sub = 0.0;
    int drift_bound = 4;

    void validate() const {
        if (p_ins < 0 || p_del < 0 || p_sub < 0 || p_sub > 1 || p_ins + p_del > 1)
            throw ParamError("ChannelPrior: invalid event probabilities");
        if (drift_bound < 0) throw ParamError("ChannelPrior: negative drift bound");
    }
};

struct TrellisState {
    std::size_t s;
    int d;
    friend bool operator==(const TrellisState&, const TrellisState&) = default;
};

/// Per-position L(v_t) = log Pr[v_t = 0 | r] - log Pr[v_t = 1 | r].
using LlrVector = std::vector<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) noexcept {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double safe_log(double p) noexcept { return p > 0 ? std::log(p) : kNegInf; }

inline ChannelPrior build_prior(const ChannelSpec& spec, std::size_t n, std::size_t received_length) {
    const double total = spec.mode == ChannelMode::iid ? spec.rate : static_cast<double>(spec.k) / static_cast<double>(n);
    const auto& tw = spec.type_weights;
    ChannelPrior p;
    p.p_ins = total * tw[ErrorKind::insertion];
    p.p_del = total * tw[ErrorKind::deletion];
    p.p_sub = total * tw[ErrorKind::substitution];
    const long gap = std::labs(static_cast<long>(received_length) - static_cast<long>(n));
    p.drift_bound = static_cast<int>(std::max<long>(4, gap + 2));
    return p;
}

/// log gamma_t for one trellis branch. `emitted` holds the received symbols consumed by
/// this branch (length next.d - prev.d + 1). `log_bit_prior` is log Pr[v_t = bit].
inline double gamma(const TrellisState& prev, const TrellisState& next, int bit, std::span<const std::uint8_t> emitted,
                    const ChannelPrior& prior, std::size_t t, const VtCode& code,
                    double log_bit_prior = std::log(0.5)) {
    if (next.s != (prev.s + t * static_cast<std::size_t>(bit)) % code.m()) return kNegInf;
    const int delta = next.d - prev.d;
    if (delta < -1 || delta > 1) return kNegInf;
    if (emitted.size() != static_cast<std::size_t>(delta + 1)) return kNegInf;
    if (std::abs(next.d) > prior.drift_bound) return kNegInf;
    const auto tx = [&](std::uint8_t r) { return r == bit ? 1.0 - prior.p_sub : prior.p_sub; };
    double p = 0;
    switch (delta) {
        case -1: p = prior.p_del; break;
        case 0: p = (1.0 - prior.p_ins - prior.p_del) * tx(emitted[0]); break;
        case 1: p = prior.p_ins * 0.5 * tx(emitted[1]); break;
    }
    return log_bit_prior + safe_log(p);
}

struct SisoResult {
    LlrVector llr;
    /// log Pr[r] under the code and channel model, from the forward pass.
    double log_evidence = kNegInf;
    /// The same quantity from the backward pass, beta_0(0, 0).
    double log_evidence_backward = kNegInf;
    /// Per position: log sum_b Pr[r, v_t = b] - log_evidence (zero up to rounding).
    std::vector<double> normalization_residual;
};

namespace detail {

// Flat (t, s, d) table.
class TrellisTable {
public:
    TrellisTable(std::size_t n, std::size_t m, int bound)
        : m_(m), bound_(bound), width_(2 * static_cast<std::size_t>(bound) + 1),
          data_((n + 1) * m * width_, kNegInf) {}
    double& at(std::size_t t, std::size_t s, int d) { return data_[(t * m_ + s) * width_ + static_cast<std::size_t>(d + bound_)]; }
    double at(std::size_t t, std::size_t s, int d) const {
        return data_[(t * m_ + s) * width_ + static_cast<std::size_t>(d + bound_)];
    }

private:
    std::size_t m_;
    int bound_;
    std::size_t width_;
    std::vector<double> data_;
};

}  // namespace detail

/// Forward-backward recursion over the (syndrome, drift) trellis. `bit_llr_prior`, if given,
/// holds log Pr[v_t=0]/Pr[v_t=1] per position; otherwise bits are equiprobable.
inline SisoResult forward_backward_full(const BitWord& received, const VtCode& code, const ChannelPrior& prior,
                                        std::span<const double> bit_llr_prior = {}) {
    prior.validate();
    const std::size_t n = code.n();
    const std::size_t m = code.m();
    const std::size_t N = received.size();
    const int bound = prior.drift_bound;
    const int final_drift = static_cast<int>(N) - static_cast<int>(n);
    if (std::abs(final_drift) > bound) throw ParamError("forward_backward: |N - n| exceeds the drift bound");
    if (!bit_llr_prior.empty() && bit_llr_prior.size() != n)
        throw LengthError("forward_backward: bit prior length must equal n");

    std::vector<double> log_prior0(n, std::log(0.5)), log_prior1(n, std::log(0.5));
    for (std::size_t t = 0; t < bit_llr_prior.size(); ++t) {
        const double l = bit_llr_prior[t];
        // log(1 / (1 + e^{-l})) and log(1 / (1 + e^{l}))
        log_prior0[t] = -log_add(0.0, -l);
        log_prior1[t] = -log_add(0.0, l);
    }

    const double log_ins = safe_log(prior.p_ins * 0.5);
    const double log_del = safe_log(prior.p_del);
    const double log_tx = safe_log(1.0 - prior.p_ins - prior.p_del);
    const double log_ok = safe_log(1.0 - prior.p_sub);
    const double log_flip = safe_log(prior.p_sub);
    const double log_no_tail = safe_log(1.0 - prior.p_ins);

    // Branch weight without the bit prior, or -inf when the received indices run out.
    // Received symbols are 1-based: after step t with drift d, t + d symbols are consumed.
    const auto branch = [&](std::size_t t, int d_prev, int delta, int bit) -> double {
        const long before = static_cast<long>(t) - 1 + d_prev;  // consumed before step t
        const long after = static_cast<long>(t) + d_prev + delta;
        if (after > static_cast<long>(N) || after < 0 || before < 0) return kNegInf;
        switch (delta) {
            case -1: return log_del;
            case 0: return log_tx + (received[static_cast<std::size_t>(before)] == bit ? log_ok : log_flip);
            default: return log_ins + (received[static_cast<std::size_t>(before) + 1] == bit ? log_ok : log_flip);
        }
    };
    const auto terminal = [&](std::size_t s, int d) -> double {
        if (s != code.a()) return kNegInf;
        if (d == final_drift) return log_no_tail;
        if (d == final_drift - 1) return log_ins;
        return kNegInf;
    };

    detail::TrellisTable alpha(n, m, bound), beta(n, m, bound);
    alpha.at(0, 0, 0) = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double lp[2] = {log_prior0[t - 1], log_prior1[t - 1]};
        for (std::size_t sp = 0; sp < m; ++sp)
            for (int dp = -bound; dp <= bound; ++dp) {
                const double a = alpha.at(t - 1, sp, dp);
                if (a == kNegInf) continue;
                for (int bit = 0; bit < 2; ++bit) {
                    const std::size_t s = (sp + t * static_cast<std::size_t>(bit)) % m;
                    for (int delta = -1; delta <= 1; ++delta) {
                        const int d = dp + delta;
                        if (d < -bound || d > bound) continue;
                        const double g = branch(t, dp, delta, bit);
                        if (g == kNegInf) continue;
                        double& slot = alpha.at(t, s, d);
                        slot = log_add(slot, a + lp[bit] + g);
                    }
                }
            }
    }

    for (std::size_t s = 0; s < m; ++s)
        for (int d = -bound; d <= bound; ++d) beta.at(n, s, d) = terminal(s, d);
    for (std::size_t t = n; t >= 1; --t) {
        const double lp[2] = {log_prior0[t - 1], log_prior1[t - 1]};
        for (std::size_t sp = 0; sp < m; ++sp)
            for (int dp = -bound; dp <= bound; ++dp) {
                double acc = kNegInf;
                for (int bit = 0; bit < 2; ++bit) {
                    const std::size_t s = (sp + t * static_cast<std::size_t>(bit)) % m;
                    for (int delta = -1; delta <= 1; ++delta) {
                        const int d = dp + delta;
                        if (d < -bound || d > bound) continue;
                        const double b = beta.at(t, s, d);
                        if (b == kNegInf) continue;
                        const double g = branch(t, dp, delta, bit);
                        if (g == kNegInf) continue;
                        acc = log_add(acc, lp[bit] + g + b);
                    }
                }
                beta.at(t - 1, sp, dp) = acc;
            }
    }

    SisoResult res;
    for (std::size_t s = 0; s < m; ++s)
        for (int d = -bound; d <= bound; ++d)
            res.log_evidence = log_add(res.log_evidence, alpha.at(n, s, d) + beta.at(n, s, d));
    res.log_evidence_backward = beta.at(0, 0, 0);
    if (res.log_evidence == kNegInf) throw NoValidPath("forward_backward: received word has no explanation in the trellis");

    res.llr.assign(n, 0.0);
    res.normalization_residual.assign(n, 0.0);
    for (std::size_t t = 1; t <= n; ++t) {
        const double lp[2] = {log_prior0[t - 1], log_prior1[t - 1]};
        double joint[2] = {kNegInf, kNegInf};
        for (std::size_t sp = 0; sp < m; ++sp)
            for (int dp = -bound; dp <= bound; ++dp) {
                const double a = alpha.at(t - 1, sp, dp);
                if (a == kNegInf) continue;
                for (int bit = 0; bit < 2; ++bit) {
                    const std::size_t s = (sp + t * static_cast<std::size_t>(bit)) % m;
                    for (int delta = -1; delta <= 1; ++delta) {
                        const int d = dp + delta;
                        if (d < -bound || d > bound) continue;
                        const double b = beta.at(t, s, d);
                        if (b == kNegInf) continue;
                        const double g = branch(t, dp, delta, bit);
                        if (g == kNegInf) continue;
                        joint[bit] = log_add(joint[bit], a + lp[bit] + g + b);
                    }
                }
            }
        if (joint[0] == kNegInf && joint[1] == kNegInf)
            res.llr[t - 1] = 0.0;
        else if (joint[1] == kNegInf)
            res.llr[t - 1] = std::numeric_limits<double>::infinity();
        else if (joint[0] == kNegInf)
            res.llr[t - 1] = kNegInf;
        else
            res.llr[t - 1] = joint[0] - joint[1];
        res.normalization_residual[t - 1] = log_add(joint[0], joint[1]) - res.log_evidence;
    }
    return res;
}

inline LlrVector forward_backward(const BitWord& received, const VtCode& code, const ChannelPrior& prior) {
    return forward_backward_full(received, code, prior).llr;
}

struct SisoOutcome {
    BitWord decoded;
    LlrVector llr;
    bool fallback = false;
};

/// Sign decision on the LLRs; ties decode to 0. Falls back to truncate/zero-pad with zero
/// LLRs when no trellis path explains the received word.
inline SisoOutcome decode_siso(const BitWord& received, const VtCode& code, const ChannelPrior& prior) {
    const auto too_far = std::labs(static_cast<long>(received.size()) - static_cast<long>(code.n())) > prior.drift_bound;
    if (!too_far) {
        try {
            auto llr = forward_backward(received, code, prior);
            BitWord out(code.n());
            for (std::size_t t = 0; t < code.n(); ++t) out[t] = llr[t] >= 0.0 ? 0 : 1;
            return {std::move(out), std::move(llr), false};
        } catch (const NoValidPath&) {
        }
    }
    return {received.resized(code.n()), LlrVector(code.n(), 0.0), true};
}

}  // namespace vtcode
