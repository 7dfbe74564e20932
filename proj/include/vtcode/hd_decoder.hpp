#pragma once

// Hard-decision single-error decoder for VT_{a,2n+1}(n).
//
// With w the weight of the received word and D the canonical syndrome difference in
// [0, m-1], the three error types are separated by length and then located as follows:
//
//   deletion   D = (a - checksum) mod m.  D <= w: a 0 was lost with D ones to its right.
//              D >  w: a 1 was lost with D - w - 1 zeros to its left.
//   insertion  D = (checksum - a) mod m.  D <= w: a 0 was added with D ones to its right.
//              D >= w: a 1 was added with D - w zeros to its left.
//   substitution  D = (checksum - a) mod m.  D <= n: bit D went 0 -> 1.  Otherwise bit m - D went 1 -> 0.
//
// Positions inside a run are interchangeable, so the codeword is unique even when the
// edit position is not.

#include <optional>
#include <string>

#include "vt_core.hpp"

namespace vtcode {

enum class HdStatus { clean, corrected_insertion, corrected_deletion, corrected_substitution, fallback };

inline const char* to_string(HdStatus s) {
    switch (s) {
        case HdStatus::clean: return "clean";
        case HdStatus::corrected_insertion: return "corrected_insertion";
        case HdStatus::corrected_deletion: return "corrected_deletion";
        case HdStatus::corrected_substitution: return "corrected_substitution";
        case HdStatus::fallback: return "fallback";
    }
    return "?";
}

struct HdOutcome {
    BitWord decoded;
    HdStatus status;
    /// 1-based position of the edit that was undone, in received coordinates (best effort).
    std::size_t edit_position = 0;
};

namespace detail {

// 1-based position of the zero in r having exactly `ones_right` ones after it, or none.
inline std::optional<std::size_t> zero_with_ones_right(const BitWord& r, std::size_t ones_right) {
    std::size_t ones = 0;
    for (std::size_t i = r.size(); i >= 1; --i) {
        if (r.bit(i)) {
            if (++ones > ones_right) return std::nullopt;
        } else if (ones == ones_right) {
            return i;
        }
    }
    return std::nullopt;
}

// 1-based position of a one in r having exactly `zeros_left` zeros before it, or none.
inline std::optional<std::size_t> one_with_zeros_left(const BitWord& r, std::size_t zeros_left) {
    std::size_t zeros = 0;
    for (std::size_t i = 1; i <= r.size(); ++i) {
        if (!r.bit(i)) {
            if (++zeros > zeros_left) return std::nullopt;
        } else if (zeros == zeros_left) {
            return i;
        }
    }
    return std::nullopt;
}

// Gap index g in [0, len] such that exactly `ones_right` ones lie at positions > g.
inline std::optional<std::size_t> gap_with_ones_right(const BitWord& r, std::size_t ones_right) {
    if (ones_right > r.weight()) return std::nullopt;
    std::size_t ones = 0, g = r.size();
    while (ones < ones_right) {
        if (r.bit(g)) ++ones;
        --g;
    }
    return g;
}

// Gap index g such that exactly `zeros_left` zeros lie at positions <= g.
inline std::optional<std::size_t> gap_with_zeros_left(const BitWord& r, std::size_t zeros_left) {
    if (zeros_left > r.size() - r.weight()) return std::nullopt;
    std::size_t zeros = 0, g = 0;
    while (zeros < zeros_left) {
        ++g;
        if (!r.bit(g)) ++zeros;
    }
    return g;
}

inline HdOutcome hd_fallback(const BitWord& received, std::size_t n) {
    return {received.resized(n), HdStatus::fallback, 0};
}

}  // namespace detail

inline HdOutcome decode_hd(const BitWord& received, const VtCode& code) {
    const std::size_t n = code.n();
    const std::size_t m = code.m();
    const std::size_t len = received.size();
    const std::size_t cs = checksum(received, code);
    const std::size_t w = received.weight();

    if (len == n) {
        if (cs == code.a()) return {received, HdStatus::clean, 0};
        const std::size_t d = (cs + m - code.a()) % m;
        std::size_t pos = 0;
        if (d <= n && received.bit(d) == 1)
            pos = d;
        else if (d > n && received.bit(m - d) == 0)
            pos = m - d;
        if (pos == 0) return detail::hd_fallback(received, n);
        BitWord v = received;
        v.flip(pos);
        return {std::move(v), HdStatus::corrected_substitution, pos};
    }

    if (len + 1 == n) {
        const std::size_t d = (code.a() + m - cs) % m;
        std::optional<std::size_t> gap;
        int bit = 0;
        if (d <= w) {
            gap = detail::gap_with_ones_right(received, d);
        } else {
            gap = detail::gap_with_zeros_left(received, d - w - 1);
            bit = 1;
        }
        if (!gap) return detail::hd_fallback(received, n);
        BitWord v = received;
        v.insert_at(*gap + 1, bit);
        return {std::move(v), HdStatus::corrected_deletion, *gap + 1};
    }

    if (len == n + 1) {
        const std::size_t d = (cs + m - code.a()) % m;
        std::optional<std::size_t> pos;
        if (d <= w) pos = detail::zero_with_ones_right(received, d);
        if (!pos && d >= w) pos = detail::one_with_zeros_left(received, d - w);
        if (!pos) return detail::hd_fallback(received, n);
        BitWord v = received;
        v.erase_at(*pos);
        return {std::move(v), HdStatus::corrected_insertion, *pos};
    }

    return detail::hd_fallback(received, n);
}

}  // namespace vtcode
