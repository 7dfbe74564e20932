#pragma once

// Brute-force bitwise posterior for short VT codes: enumerate every word of the code,
// score Pr[r | v] with a per-word alignment recursion, and marginalize. Shares only the
// channel parameters with the trellis decoder, not its code path.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "siso_decoder.hpp"

namespace vtcode {

class SizeLimit : public Error {
public:
    using Error::Error;
};

inline constexpr std::size_t kExactMapMaxLength = 12;

/// Pr[r | v] in the linear domain. State (t, j): t bits of v transmitted, j symbols of r
/// produced, with |j - t| kept within the prior's drift bound after every step.
inline double alignment_likelihood(const BitWord& v, const BitWord& r, const ChannelPrior& prior) {
    const std::size_t n = v.size();
    const std::size_t N = r.size();
    const long bound = prior.drift_bound;
    const double keep = 1.0 - prior.p_ins - prior.p_del;
    const auto emit = [&](std::size_t j, int bit) { return r[j] == bit ? 1.0 - prior.p_sub : prior.p_sub; };

    std::vector<double> cur(N + 1, 0.0), next(N + 1, 0.0);
    cur[0] = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        const int bit = v[t];
        for (std::size_t j = 0; j <= N; ++j) {
            const double p = cur[j];
            if (p == 0.0) continue;
            const auto ok = [&](std::size_t j2) { return std::labs(static_cast<long>(j2) - static_cast<long>(t + 1)) <= bound; };
            if (ok(j)) next[j] += p * prior.p_del;
            if (j + 1 <= N && ok(j + 1)) next[j + 1] += p * keep * emit(j, bit);
            if (j + 2 <= N && ok(j + 2)) next[j + 2] += p * prior.p_ins * 0.5 * emit(j + 1, bit);
        }
        std::swap(cur, next);
    }
    double total = cur[N] * (1.0 - prior.p_ins);
    if (N >= 1) total += cur[N - 1] * prior.p_ins * 0.5;
    return total;
}

/// Exact L(v_t) by enumeration over all of VT_{a,m}(n), uniform over codewords.
inline LlrVector exact_map_oracle(const BitWord& received, const VtCode& code, const ChannelPrior& prior) {
    const std::size_t n = code.n();
    if (n > kExactMapMaxLength) throw SizeLimit("exact_map_oracle: n exceeds enumeration limit");
    std::vector<double> mass0(n, 0.0), mass1(n, 0.0);
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
        BitWord v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>((x >> i) & 1U);
        if (!is_codeword(v, code)) continue;
        const double like = alignment_likelihood(v, received, prior);
        if (like == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) (v[i] ? mass1 : mass0)[i] += like;
    }
    LlrVector llr(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (mass0[i] == 0.0 && mass1[i] == 0.0)
            llr[i] = 0.0;
        else
            llr[i] = std::log(mass0[i]) - std::log(mass1[i]);  // +-inf when one side is empty
    }
    return llr;
}

}  // namespace vtcode
